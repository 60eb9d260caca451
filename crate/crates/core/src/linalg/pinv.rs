use alloc::format;

use super::matrix::Matrix;
use super::svd::{svd_full, SvdFactors};
use crate::error::{Error, Result};

/// Relative singular-value cutoff used when no tolerance is given.
pub const DEFAULT_PINV_TOL: f64 = 1e-10;

fn assemble(f: &SvdFactors, keep: usize) -> Matrix {
    let inv: alloc::vec::Vec<f64> = f
        .sigma
        .iter()
        .enumerate()
        .map(|(i, s)| if i < keep { 1.0 / s } else { 0.0 })
        .collect();
    // V · Σ⁺ · Wᵀ
    f.v.scale_cols(&inv).matmul_t(&f.w)
}

/// Moore–Penrose pseudo-inverse; singular values at or below
/// `tol · σ_max` are treated as zero.
pub fn pinv(a: &Matrix, tol: f64) -> Result<Matrix> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Argument(format!("pinv tolerance must be positive, got {tol}")));
    }
    let f = svd_full(a)?;
    let smax = f.sigma.first().copied().unwrap_or(0.0);
    let keep = f.sigma.iter().filter(|&&s| s > tol * smax).count();
    Ok(assemble(&f, keep))
}

/// Pseudo-inverse truncated to exactly `rank` singular triplets.
pub fn pinv_rank(a: &Matrix, rank: usize) -> Result<Matrix> {
    let f = svd_full(a)?;
    if rank > f.sigma.len() {
        return Err(Error::Argument(format!(
            "truncation rank {rank} exceeds {} singular values",
            f.sigma.len()
        )));
    }
    if rank > 0 && f.sigma[rank - 1] <= f64::EPSILON * f.sigma[0] {
        return Err(Error::Singular(format!(
            "singular value {} is negligible at requested rank {rank}",
            f.sigma[rank - 1]
        )));
    }
    Ok(assemble(&f, rank))
}
