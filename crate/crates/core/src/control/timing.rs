//! Workloads and dominant-term cost model for comparing the offline
//! predictor builds on a single-input single-output plant.

use alloc::vec;

use crate::error::Result;
use crate::hankel::{build_hankels, required_samples, stack_past_future, HankelSet};
use crate::linalg::{pinv, svd_full, svd_left, svd_partition, Matrix, DEFAULT_PINV_TOL};
use crate::plant::{simulate_lti, PlantModel};
use crate::signal::generate_pe_input;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimingMethod {
    /// Pseudo-inverse of the `3T_h × M` regressor.
    Spc,
    /// SVD of the `2T_h × M` past matrix plus SVD of the projected future matrix.
    Ntdpc,
}

impl TimingMethod {
    pub fn name(self) -> &'static str {
        match self {
            TimingMethod::Spc => "spc",
            TimingMethod::Ntdpc => "ntdpc",
        }
    }
}

/// Dominant flop terms: `(3T_h)² M` for the regressor pseudo-inverse and
/// `(2T_h)² M` for each of the two SVDs.
pub fn flops_model(method: TimingMethod, t_h: usize, m: usize) -> f64 {
    let (t, m) = (t_h as f64, m as f64);
    match method {
        TimingMethod::Spc => 9.0 * t * t * m,
        TimingMethod::Ntdpc => 8.0 * t * t * m,
    }
}

/// Second-order SISO plant used by the benchmark.
pub fn siso_plant() -> PlantModel {
    let a = Matrix::from_rows(&[[0.9, 0.2], [0.0, 0.7]]).expect("constant matrix");
    let b = Matrix::from_rows(&[[0.0], [1.0]]).expect("constant matrix");
    let c = Matrix::from_rows(&[[1.0, 0.0]]).expect("constant matrix");
    PlantModel::new(a, b, c, 1.0).expect("valid plant")
}

/// Noise-free Hankel data with `T_ini = N = t_h` and `m` columns.
pub fn siso_benchmark_data(t_h: usize, m: usize, seed: u64) -> Result<HankelSet> {
    let plant = siso_plant();
    let u = generate_pe_input(1, required_samples(t_h, t_h, m), 1.0, seed)?;
    let traj = simulate_lti(&plant, &vec![0.0; plant.n()], &u, None)?;
    build_hankels(&traj, t_h, t_h, m)
}

pub fn spc_workload(h: &HankelSet) -> Result<Matrix> {
    let regressor = Matrix::vstack(&[&h.up, &h.yp, &h.uf]);
    Ok(h.yf.matmul(&pinv(&regressor, DEFAULT_PINV_TOL)?))
}

/// Both factorizations of the NTDPC build; returns `L_f1`.
pub fn ntdpc_workload(h: &HankelSet, order: usize) -> Result<Matrix> {
    let (zp, zf) = stack_past_future(h);
    let r = (h.t_ini + order).min(zp.rows());
    let part = svd_partition(&svd_full(&zp)?, r)?;
    let s = zf.matmul(&part.v1);
    let (w, sigma) = svd_left(&(&zf - &s.matmul_t(&part.v1)))?;
    let k = h.horizon.min(sigma.len());
    Ok(w.slice_cols(0..k).scale_cols(&sigma[..k]))
}
