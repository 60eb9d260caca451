//! Subspace predictive control: one least-squares regression from past
//! inputs, past outputs and future inputs to future outputs.

use super::{LinearPredictor, Predictor, PredictorDims, PredictorKind};
use crate::error::{Error, Result};
use crate::hankel::HankelSet;
use crate::linalg::{pinv, Matrix, DEFAULT_PINV_TOL};
use crate::signal::ScalingPair;

#[derive(Debug, Clone)]
pub struct SpcPredictor {
    pub dims: PredictorDims,
    /// Coefficients on `u_ini`.
    pub p1: Matrix,
    /// Coefficients on `y_ini`.
    pub p2: Matrix,
    /// Coefficients on `u_N`.
    pub gamma: Matrix,
    z_map: Matrix,
    pub scaling: ScalingPair,
}

/// Minimum-norm solution `Θ = Yf · pinv(col(Up, Yp, Uf))`.
pub fn build_spc(h: &HankelSet, n: usize, scaling: ScalingPair) -> Result<SpcPredictor> {
    let dims = PredictorDims { n, n_u: h.n_u(), n_y: h.n_y(), t_ini: h.t_ini, horizon: h.horizon };
    if h.uf.rows() != dims.u_len() || h.yf.rows() != dims.y_len() {
        return Err(Error::dim("future Hankel rows", dims.u_len(), h.uf.rows()));
    }
    let regressor = Matrix::vstack(&[&h.up, &h.yp, &h.uf]);
    let theta = h.yf.matmul(&pinv(&regressor, DEFAULT_PINV_TOL)?);
    let (a, b) = (dims.u_ini_len(), dims.z_len());
    let rows = theta.rows();
    Ok(SpcPredictor {
        dims,
        p1: theta.block(0..rows, 0..a),
        p2: theta.block(0..rows, a..b),
        gamma: theta.block(0..rows, b..theta.cols()),
        z_map: theta.block(0..rows, 0..b),
        scaling,
    })
}

impl SpcPredictor {
    pub fn linear(&self) -> LinearPredictor {
        LinearPredictor {
            kind: PredictorKind::Spc,
            dims: self.dims,
            z_map: self.z_map.clone(),
            u_map: self.gamma.clone(),
            scaling: self.scaling.clone(),
        }
    }
}

impl Predictor for SpcPredictor {
    fn kind(&self) -> PredictorKind {
        PredictorKind::Spc
    }
    fn dims(&self) -> &PredictorDims {
        &self.dims
    }
    fn z_map(&self) -> &Matrix {
        &self.z_map
    }
    fn u_map(&self) -> &Matrix {
        &self.gamma
    }
}
