//! Reduced-order SVD predictor with a best linear unbiased estimate of the
//! initial condition.
//!
//! The past Hankel matrix is split into its rank-`r` signal part,
//! `Zp ≈ L1 V1ᵀ` with `L1 = W1 Σ1`. The future matrix decomposes as
//! `Zf = S V1ᵀ + Zf (I − V1 V1ᵀ)`; the second term is the future data in
//! the null space of the past signal part, whose leading `n_u·N` left
//! singular triplets give `L_f1`. The residual right basis is never formed
//! explicitly: `Zf (I − V1 V1ᵀ)` has the same left singular vectors and
//! values as `Zf V2`, and avoids an M×(M−r) matrix.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{Predictor, PredictorDims, PredictorKind};
use crate::error::{Error, Result};
use crate::linalg::{blue_pinv, condition_number, inverse, svd_full, svd_left, svd_partition, Matrix, PartitionedSvd};
use crate::signal::ScalingPair;

/// `L_fu` condition number above which the build records a warning.
pub const LFU_WARN_CONDITION: f64 = 1e8;
/// `L_fu` condition number above which the build fails.
pub const LFU_FAIL_CONDITION: f64 = 1e12;

/// Rank-`n_u·T_ini + n` split of the SVD of the past Hankel matrix.
pub fn factor_zp(zp: &Matrix, dims: &PredictorDims) -> Result<PartitionedSvd> {
    let r = dims.past_rank();
    let p = zp.rows().min(zp.cols());
    if r > p {
        return Err(Error::Argument(format!(
            "partition rank n_u*T_ini + n = {r} exceeds min dimension {p} of the past Hankel matrix"
        )));
    }
    svd_partition(&svd_full(zp)?, r)
}

/// Per-sample covariance repeated along the diagonal for a `t_ini` window.
pub fn expand_covariance(sigma: &Matrix, t_ini: usize) -> Matrix {
    Matrix::block_diag_repeat(sigma, t_ini)
}

#[derive(Debug, Clone)]
pub struct ReducedFactors {
    pub l1: Matrix,
    pub sigma1: Vec<f64>,
    pub v1: Matrix,
    /// Residual singular values of the past Hankel matrix.
    pub sigma2: Vec<f64>,
    /// Right singular vectors paired with `sigma2` (thin).
    pub v2: Matrix,
    pub s: Matrix,
    pub lf1: Matrix,
    /// All singular values of the future data projected off the past signal space.
    pub sigma_f: Vec<f64>,
    pub l_u: Matrix,
    pub l_y: Matrix,
    pub s_u: Matrix,
    pub s_y: Matrix,
    pub l_fu: Matrix,
    pub l_fy: Matrix,
    pub lfu_condition: f64,
}

#[derive(Debug, Clone)]
pub struct NtdpcPredictor {
    pub dims: PredictorDims,
    pub p1: Matrix,
    pub p2: Matrix,
    /// Estimator matrix mapping `col(u_ini, y_ini)` to the reduced coordinate.
    pub blue: Matrix,
    pub factors: ReducedFactors,
    pub scaling: ScalingPair,
    pub warnings: Vec<String>,
}

/// Builds the predictor from scaled Hankel data.
///
/// `sigma_zeta` is the per-sample output noise covariance in the same
/// scaled coordinates as the data. A zero matrix (noise-free data) is
/// replaced by the identity; the estimate does not depend on the scale of
/// the covariance.
pub fn build_ntdpc(
    zp: &Matrix,
    zf: &Matrix,
    sigma_zeta: &Matrix,
    dims: PredictorDims,
    scaling: ScalingPair,
) -> Result<NtdpcPredictor> {
    dims.check_hankel(zp, zf)?;
    if sigma_zeta.shape() != (dims.n_y, dims.n_y) {
        return Err(Error::dim("noise covariance size", dims.n_y, sigma_zeta.rows()));
    }
    let nu_n = dims.u_len();
    let ut = dims.u_ini_len();
    let part = factor_zp(zp, &dims)?;
    let l1 = part.w1.scale_cols(&part.sigma1);
    let s = zf.matmul(&part.v1);
    let zf_perp = zf - &s.matmul_t(&part.v1);
    let (wf, sigma_f) = svd_left(&zf_perp)?;
    if sigma_f.len() < nu_n {
        return Err(Error::PredictorBuild(format!(
            "future data has only {} singular directions, need n_u*N = {nu_n}",
            sigma_f.len()
        )));
    }
    let lf1 = wf.slice_cols(0..nu_n).scale_cols(&sigma_f[..nu_n]);

    let r = part.rank;
    let l_u = l1.slice_rows(0..ut);
    let l_y = l1.slice_rows(ut..l1.rows());
    let s_u = s.slice_rows(0..nu_n);
    let s_y = s.slice_rows(nu_n..s.rows());
    let l_fu = lf1.slice_rows(0..nu_n);
    let l_fy = lf1.slice_rows(nu_n..lf1.rows());

    let mut warnings = Vec::new();
    let lfu_condition = condition_number(&l_fu)?;
    if lfu_condition.is_nan() || lfu_condition > LFU_FAIL_CONDITION {
        return Err(Error::PredictorBuild(format!(
            "L_fu is numerically singular (condition number {lfu_condition:e}); \
             the invertibility assumption on L_fu does not hold for this data"
        )));
    }
    if lfu_condition > LFU_WARN_CONDITION {
        warnings.push(format!("L_fu is ill-conditioned (condition number {lfu_condition:e})"));
    }
    let p2 = l_fy.matmul(&inverse(&l_fu)?);

    let sigma_sample = if sigma_zeta.max_abs() == 0.0 {
        Matrix::identity(dims.n_y)
    } else {
        sigma_zeta.clone()
    };
    let blue = blue_pinv(&l_u, &l_y, &expand_covariance(&sigma_sample, dims.t_ini))?;
    let p1 = (&s_y - &p2.matmul(&s_u)).matmul(&blue);
    debug_assert_eq!(blue.rows(), r);

    Ok(NtdpcPredictor {
        dims,
        p1,
        p2,
        blue,
        factors: ReducedFactors {
            l1,
            sigma1: part.sigma1,
            v1: part.v1,
            sigma2: part.sigma2,
            v2: part.v2,
            s,
            lf1,
            sigma_f,
            l_u,
            l_y,
            s_u,
            s_y,
            l_fu,
            l_fy,
            lfu_condition,
        },
        scaling,
        warnings,
    })
}

impl NtdpcPredictor {
    pub fn sensitivity_index(&self) -> Result<f64> {
        super::sensitivity_index(&self.factors.sigma1, &self.factors.sigma2)
    }

    /// Reduced initial-condition estimate `η̂1` for a measured window.
    pub fn estimate_eta(&self, u_ini: &[f64], y_ini: &[f64]) -> Vec<f64> {
        let mut z = u_ini.to_vec();
        z.extend_from_slice(y_ini);
        self.blue.mul_vec(&z)
    }

    pub fn linear(&self) -> super::LinearPredictor {
        super::LinearPredictor {
            kind: PredictorKind::Ntdpc,
            dims: self.dims,
            z_map: self.p1.clone(),
            u_map: self.p2.clone(),
            scaling: self.scaling.clone(),
        }
    }
}

impl Predictor for NtdpcPredictor {
    fn kind(&self) -> PredictorKind {
        PredictorKind::Ntdpc
    }
    fn dims(&self) -> &PredictorDims {
        &self.dims
    }
    fn z_map(&self) -> &Matrix {
        &self.p1
    }
    fn u_map(&self) -> &Matrix {
        &self.p2
    }
}
