//! LQ-based reduced-order predictor.
//!
//! The past Hankel matrix is factored as `Zp = L Qo`. The first `r` rows of
//! `Qo` serve as the past basis and the leading `r×r` triangular block of
//! `L` recovers the coordinate from the first `r` entries of
//! `col(u_ini, y_ini)` by exact substitution. The remaining past rows, and
//! the noise they carry, are ignored. The future part uses the LQ factor of
//! the future data projected off that basis, truncated to `n_u·N` columns.

use alloc::format;

use super::{LinearPredictor, Predictor, PredictorDims, PredictorKind};
use crate::error::{Error, Result};
use crate::linalg::{inverse, lq_factor, lq_lower, Matrix};
use crate::signal::ScalingPair;

#[derive(Debug, Clone)]
pub struct SmmpcPredictor {
    pub dims: PredictorDims,
    /// Coefficients on `u_ini`.
    pub e1: Matrix,
    /// Coefficients on `y_ini`.
    pub e2: Matrix,
    /// Coefficients on `u_N`.
    pub e3: Matrix,
    z_map: Matrix,
    pub scaling: ScalingPair,
}

const TRIANGULAR_TOL: f64 = 1e-12;

pub fn build_smmpc(zp: &Matrix, zf: &Matrix, dims: PredictorDims, scaling: ScalingPair) -> Result<SmmpcPredictor> {
    dims.check_hankel(zp, zf)?;
    let r = dims.past_rank();
    let nu_n = dims.u_len();
    let zl = dims.z_len();
    if r > zp.rows().min(zp.cols()) {
        return Err(Error::Argument(format!(
            "partition rank {r} exceeds the size of the past Hankel matrix"
        )));
    }
    let past = lq_factor(zp);
    let tri = past.l.block(0..r, 0..r);
    let dmax = tri.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if tri.diagonal().iter().any(|d| d.abs() <= TRIANGULAR_TOL * dmax) {
        return Err(Error::PredictorBuild(
            "leading triangular block of the past LQ factor is singular".into(),
        ));
    }
    let q_r = past.qo.slice_rows(0..r);
    let s = zf.matmul_t(&q_r);
    let zf_perp = zf - &s.matmul(&q_r);
    let lf = lq_lower(&zf_perp);
    if lf.cols() < nu_n {
        return Err(Error::PredictorBuild(format!(
            "future data has rank at most {}, need n_u*N = {nu_n}",
            lf.cols()
        )));
    }
    let l_fu = lf.block(0..nu_n, 0..nu_n);
    let l_fy = lf.block(nu_n..lf.rows(), 0..nu_n);
    let e3 = l_fy.matmul(&inverse(&l_fu).map_err(|e| {
        Error::PredictorBuild(format!("future input block of the LQ factor is singular: {e}"))
    })?);
    let s_u = s.slice_rows(0..nu_n);
    let s_y = s.slice_rows(nu_n..s.rows());
    let coeff = &s_y - &e3.matmul(&s_u);
    // η1 = T⁻¹ z[..r]; the trailing z entries get zero weight
    let head = coeff.matmul(&inverse(&tri)?);
    let mut z_map = Matrix::zeros(dims.y_len(), zl);
    z_map.set_block(0, 0, &head);
    let ut = dims.u_ini_len();
    let rows = z_map.rows();
    Ok(SmmpcPredictor {
        dims,
        e1: z_map.block(0..rows, 0..ut),
        e2: z_map.block(0..rows, ut..zl),
        e3,
        z_map,
        scaling,
    })
}

impl SmmpcPredictor {
    pub fn linear(&self) -> LinearPredictor {
        LinearPredictor {
            kind: PredictorKind::Smmpc,
            dims: self.dims,
            z_map: self.z_map.clone(),
            u_map: self.e3.clone(),
            scaling: self.scaling.clone(),
        }
    }
}

impl Predictor for SmmpcPredictor {
    fn kind(&self) -> PredictorKind {
        PredictorKind::Smmpc
    }
    fn dims(&self) -> &PredictorDims {
        &self.dims
    }
    fn z_map(&self) -> &Matrix {
        &self.z_map
    }
    fn u_map(&self) -> &Matrix {
        &self.e3
    }
}
