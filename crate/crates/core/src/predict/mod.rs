//! Multi-step output predictors built offline from Hankel data.
//!
//! Every predictor is an affine-free linear map
//! `ŷ_N = Z · col(u_ini, y_ini) + U · u_N` in scaled coordinates; the three
//! constructions differ only in how `Z` and `U` are estimated.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::signal::ScalingPair;

mod ntdpc;
mod order;
mod smmpc;
mod spc;

pub use ntdpc::{
    build_ntdpc, expand_covariance, factor_zp, NtdpcPredictor, ReducedFactors,
    LFU_FAIL_CONDITION, LFU_WARN_CONDITION,
};
pub use order::{estimate_order, sensitivity_index, ORDER_MIN_GAP};
pub use smmpc::{build_smmpc, SmmpcPredictor};
pub use spc::{build_spc, SpcPredictor};

/// Plant and horizon sizes shared by all predictors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredictorDims {
    /// Plant order.
    pub n: usize,
    pub n_u: usize,
    pub n_y: usize,
    pub t_ini: usize,
    pub horizon: usize,
}

impl PredictorDims {
    /// Length of `col(u_ini, y_ini)`.
    pub fn z_len(&self) -> usize {
        (self.n_u + self.n_y) * self.t_ini
    }

    pub fn u_ini_len(&self) -> usize {
        self.n_u * self.t_ini
    }

    pub fn y_ini_len(&self) -> usize {
        self.n_y * self.t_ini
    }

    /// Length of the future input sequence `u_N`.
    pub fn u_len(&self) -> usize {
        self.n_u * self.horizon
    }

    /// Length of the predicted output sequence `ŷ_N`.
    pub fn y_len(&self) -> usize {
        self.n_y * self.horizon
    }

    /// Rank of the noise-free past Hankel matrix, `n_u·T_ini + n`.
    pub fn past_rank(&self) -> usize {
        self.n_u * self.t_ini + self.n
    }

    fn check_hankel(&self, zp: &Matrix, zf: &Matrix) -> Result<()> {
        if zp.rows() != self.z_len() {
            return Err(Error::dim("past Hankel rows", self.z_len(), zp.rows()));
        }
        if zf.rows() != (self.n_u + self.n_y) * self.horizon {
            return Err(Error::dim("future Hankel rows", (self.n_u + self.n_y) * self.horizon, zf.rows()));
        }
        if zp.cols() != zf.cols() {
            return Err(Error::dim("Hankel column count", zp.cols(), zf.cols()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredictorKind {
    Ntdpc,
    Spc,
    Smmpc,
}

impl PredictorKind {
    pub const ALL: [PredictorKind; 3] = [PredictorKind::Ntdpc, PredictorKind::Spc, PredictorKind::Smmpc];

    pub fn name(self) -> &'static str {
        match self {
            PredictorKind::Ntdpc => "ntdpc",
            PredictorKind::Spc => "spc",
            PredictorKind::Smmpc => "smmpc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        PredictorKind::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(s))
    }
}

pub trait Predictor {
    fn kind(&self) -> PredictorKind;
    fn dims(&self) -> &PredictorDims;
    /// Map from `col(u_ini, y_ini)` to `ŷ_N`.
    fn z_map(&self) -> &Matrix;
    /// Map from `u_N` to `ŷ_N`.
    fn u_map(&self) -> &Matrix;

    fn predict(&self, u_ini: &[f64], y_ini: &[f64], u_n: &[f64]) -> Result<Vec<f64>> {
        let d = self.dims();
        if u_ini.len() != d.u_ini_len() {
            return Err(Error::dim("u_ini length", d.u_ini_len(), u_ini.len()));
        }
        if y_ini.len() != d.y_ini_len() {
            return Err(Error::dim("y_ini length", d.y_ini_len(), y_ini.len()));
        }
        if u_n.len() != d.u_len() {
            return Err(Error::dim("u_N length", d.u_len(), u_n.len()));
        }
        let mut z = Vec::with_capacity(d.z_len());
        z.extend_from_slice(u_ini);
        z.extend_from_slice(y_ini);
        let mut y = self.z_map().mul_vec(&z);
        for (a, b) in y.iter_mut().zip(self.u_map().mul_vec(u_n)) {
            *a += b;
        }
        Ok(y)
    }
}

/// The bare linear maps of any predictor plus the scaling they were
/// estimated under; what the controller and file formats consume.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPredictor {
    pub kind: PredictorKind,
    pub dims: PredictorDims,
    pub z_map: Matrix,
    pub u_map: Matrix,
    pub scaling: ScalingPair,
}

impl LinearPredictor {
    pub fn new(
        kind: PredictorKind,
        dims: PredictorDims,
        z_map: Matrix,
        u_map: Matrix,
        scaling: ScalingPair,
    ) -> Result<Self> {
        if z_map.shape() != (dims.y_len(), dims.z_len()) {
            return Err(Error::Argument(format!(
                "z-map is {}x{}, expected {}x{}",
                z_map.rows(),
                z_map.cols(),
                dims.y_len(),
                dims.z_len()
            )));
        }
        if u_map.shape() != (dims.y_len(), dims.u_len()) {
            return Err(Error::Argument(format!(
                "u-map is {}x{}, expected {}x{}",
                u_map.rows(),
                u_map.cols(),
                dims.y_len(),
                dims.u_len()
            )));
        }
        if scaling.mu.len() != dims.n_u || scaling.my.len() != dims.n_y {
            return Err(Error::Argument("scaling does not match predictor channels".into()));
        }
        Ok(LinearPredictor { kind, dims, z_map, u_map, scaling })
    }
}

impl Predictor for LinearPredictor {
    fn kind(&self) -> PredictorKind {
        self.kind
    }
    fn dims(&self) -> &PredictorDims {
        &self.dims
    }
    fn z_map(&self) -> &Matrix {
        &self.z_map
    }
    fn u_map(&self) -> &Matrix {
        &self.u_map
    }
}
