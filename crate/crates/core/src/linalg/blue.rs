//! Best linear unbiased estimation of the reduced initial-condition
//! coordinate: minimize the noise-weighted output residual
//! `(y − L_y η)ᵀ Σ⁻¹ (y − L_y η)` subject to the noise-free input rows
//! `L_u η = u`.
//!
//! Two independent routes are provided. [`constrained_wls`] parameterizes the
//! affine feasible set with an orthonormal null-space basis and solves the
//! reduced normal equations by Cholesky (falling back to the full KKT system
//! when they are badly conditioned). [`blue_pinv`] assembles the estimator
//! matrix with the projector `I − L_u† L_u` and a rank-truncated
//! pseudo-inverse of the projected normal matrix.

use alloc::format;
use alloc::vec::Vec;

use super::lq::{lq_factor, null_space_rows};
use super::matrix::{sub_vec, Matrix};
use super::pinv::{pinv, pinv_rank, DEFAULT_PINV_TOL};
use super::solve::{forward_substitute, Cholesky, Lu};
use super::svd::singular_values;
use crate::error::{Error, Result};

/// Condition number of the projected normal matrix above which the
/// closed form is abandoned for the KKT system.
pub const KKT_FALLBACK_CONDITION: f64 = 1e12;

const RANK_TOL: f64 = 1e-12;

fn check_shapes(l_u: &Matrix, l_y: &Matrix, sigma_zeta: &Matrix) -> Result<()> {
    if l_u.cols() != l_y.cols() {
        return Err(Error::dim("L_u/L_y column count", l_y.cols(), l_u.cols()));
    }
    if sigma_zeta.rows() != l_y.rows() || sigma_zeta.cols() != l_y.rows() {
        return Err(Error::dim("noise covariance size", l_y.rows(), sigma_zeta.rows()));
    }
    if !sigma_zeta.is_symmetric(1e-12) {
        return Err(Error::Estimation("noise covariance is not symmetric".into()));
    }
    Ok(())
}

fn check_full_row_rank(l_u: &Matrix) -> Result<()> {
    if l_u.rows() == 0 {
        return Ok(());
    }
    if l_u.rows() > l_u.cols() {
        return Err(Error::Estimation(format!(
            "L_u has more rows ({}) than columns ({}); it cannot have full row rank",
            l_u.rows(),
            l_u.cols()
        )));
    }
    let s = singular_values(l_u)?;
    let smin = *s.last().expect("non-empty");
    if smin <= RANK_TOL * s[0] {
        return Err(Error::Estimation(format!(
            "L_u is rank deficient (σ_min/σ_max = {:e})",
            smin / s[0]
        )));
    }
    Ok(())
}

fn covariance_factor(sigma_zeta: &Matrix) -> Result<Cholesky> {
    Cholesky::new(sigma_zeta)
        .map_err(|_| Error::Estimation("noise covariance is not positive definite".into()))
}

/// Equality-constrained weighted least squares for the reduced coordinate.
pub fn constrained_wls(
    l_u: &Matrix,
    l_y: &Matrix,
    sigma_zeta: &Matrix,
    u_ini: &[f64],
    y_ini_m: &[f64],
) -> Result<Vec<f64>> {
    check_shapes(l_u, l_y, sigma_zeta)?;
    if u_ini.len() != l_u.rows() {
        return Err(Error::dim("u_ini length", l_u.rows(), u_ini.len()));
    }
    if y_ini_m.len() != l_y.rows() {
        return Err(Error::dim("y_ini length", l_y.rows(), y_ini_m.len()));
    }
    check_full_row_rank(l_u)?;
    let r = l_u.cols();
    let p = l_u.rows();
    let chol = covariance_factor(sigma_zeta)?;

    // particular solution of L_u η = u through the LQ factors: η_p = Qoᵀ L⁻¹ u
    let eta_p = if p == 0 {
        alloc::vec![0.0; r]
    } else {
        let f = lq_factor(l_u);
        let t = forward_substitute(&f.l, u_ini);
        f.qo.t_mul_vec(&t)
    };
    if p == r {
        return Ok(eta_p);
    }
    let basis = if p == 0 {
        Matrix::identity(r)
    } else {
        null_space_rows(l_u).transpose()
    };

    // whitened reduced problem: min ‖b − A ξ‖
    let a = chol.solve_lower_mat(&l_y.matmul(&basis));
    let resid = sub_vec(y_ini_m, &l_y.mul_vec(&eta_p));
    let b = chol.solve_lower(&resid);
    let s = singular_values(&a)?;
    let smin = s.last().copied().unwrap_or(0.0);
    if a.rows() < a.cols() || smin <= f64::EPSILON * s[0] {
        return Err(Error::Estimation(
            "projected normal matrix L̃_yᵀ Σ⁻¹ L̃_y is singular on the null space of L_u".into(),
        ));
    }
    let cond = (s[0] / smin) * (s[0] / smin);
    if cond > KKT_FALLBACK_CONDITION {
        return kkt_solve(l_u, l_y, &chol, u_ini, y_ini_m);
    }
    let h = a.t_matmul(&a);
    let xi = Cholesky::new(&h)
        .map_err(|_| Error::Estimation("projected normal matrix is not positive definite".into()))?
        .solve(&a.t_mul_vec(&b));
    let mut eta = eta_p;
    for (e, d) in eta.iter_mut().zip(basis.mul_vec(&xi)) {
        *e += d;
    }
    Ok(eta)
}

fn kkt_solve(
    l_u: &Matrix,
    l_y: &Matrix,
    chol: &Cholesky,
    u_ini: &[f64],
    y_ini_m: &[f64],
) -> Result<Vec<f64>> {
    let r = l_u.cols();
    let p = l_u.rows();
    let ly_w = chol.solve_lower_mat(l_y);
    let y_w = chol.solve_lower(y_ini_m);
    let mut k = Matrix::zeros(r + p, r + p);
    k.set_block(0, 0, &ly_w.t_matmul(&ly_w));
    k.set_block(0, r, &l_u.transpose());
    k.set_block(r, 0, l_u);
    let mut rhs = ly_w.t_mul_vec(&y_w);
    rhs.extend_from_slice(u_ini);
    let sol = Lu::new(&k)
        .map_err(|e| Error::Estimation(format!("KKT system singular: {e}")))?
        .solve(&rhs);
    Ok(sol[..r].to_vec())
}

/// The estimator matrix `L1†_Σ` with `η̂ = L1†_Σ · col(u_ini, y_ini_m)`.
pub fn blue_pinv(l_u: &Matrix, l_y: &Matrix, sigma_zeta: &Matrix) -> Result<Matrix> {
    check_shapes(l_u, l_y, sigma_zeta)?;
    check_full_row_rank(l_u)?;
    let r = l_u.cols();
    let p = l_u.rows();
    let q = l_y.rows();
    let chol = covariance_factor(sigma_zeta)?;

    let lu_pinv = if p == 0 {
        Matrix::zeros(r, 0)
    } else {
        pinv(l_u, DEFAULT_PINV_TOL)?
    };
    let proj = &Matrix::identity(r) - &lu_pinv.matmul(l_u);
    // K = P (P Lyᵀ Σ⁻¹ Ly P)† P Lyᵀ Σ⁻¹
    let ly_w_p = chol.solve_lower_mat(l_y).matmul(&proj);
    let normal = ly_w_p.t_matmul(&ly_w_p);
    let normal_pinv = pinv_rank(&normal, r - p).map_err(|_| {
        Error::Estimation(
            "projected normal matrix L̃_yᵀ Σ⁻¹ L̃_y is singular on the null space of L_u".into(),
        )
    })?;
    // Σ⁻¹ = C⁻ᵀ C⁻¹, so (Ly P)ᵀ Σ⁻¹ = (C⁻¹ Ly P)ᵀ C⁻¹
    let c_inv = chol.solve_lower_mat(&Matrix::identity(q));
    let k = proj.matmul(&normal_pinv).matmul(&ly_w_p.t_matmul(&c_inv));
    let u_block = &lu_pinv - &k.matmul(l_y).matmul(&lu_pinv);
    Ok(Matrix::hstack(&[&u_block, &k]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_input_block_fully_determines_the_estimate() {
        let l_u = Matrix::identity(2);
        let l_y = Matrix::from_rows(&[[1.0, 3.0], [-2.0, 0.5], [0.3, 0.3]]).unwrap();
        let eta = constrained_wls(&l_u, &l_y, &Matrix::identity(3), &[0.7, -1.1], &[9.0, 9.0, 9.0]).unwrap();
        assert!((eta[0] - 0.7).abs() < 1e-15 && (eta[1] + 1.1).abs() < 1e-15);
        let b = blue_pinv(&l_u, &Matrix::zeros(3, 2), &Matrix::identity(3));
        // zero L_y leaves nothing to estimate only when the null space is empty
        let b = b.unwrap();
        assert!((&b.block(0..2, 0..2) - &Matrix::identity(2)).max_abs() < 1e-15);
        assert!(b.block(0..2, 2..5).max_abs() < 1e-15);
    }

    #[test]
    fn empty_input_block_reduces_to_ordinary_least_squares() {
        let l_u = Matrix::zeros(0, 2);
        let l_y = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let y = [1.0, 2.0, 4.0];
        let eta = constrained_wls(&l_u, &l_y, &Matrix::identity(3), &[], &y).unwrap();
        let ols = pinv(&l_y, DEFAULT_PINV_TOL).unwrap().mul_vec(&y);
        for (a, b) in eta.iter().zip(&ols) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn reports_failing_preconditions() {
        let l_u = Matrix::from_rows(&[[1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]).unwrap();
        let l_y = Matrix::identity(3);
        let err = constrained_wls(&l_u, &l_y, &Matrix::identity(3), &[1.0, 2.0], &[0.0; 3]).unwrap_err();
        assert!(matches!(err, Error::Estimation(ref m) if m.contains("rank deficient")));

        // output rows blind to the null-space direction
        let l_u = Matrix::from_rows(&[[1.0, 0.0]]).unwrap();
        let l_y = Matrix::from_rows(&[[1.0, 0.0]]).unwrap();
        let err = constrained_wls(&l_u, &l_y, &Matrix::identity(1), &[1.0], &[0.0]).unwrap_err();
        assert!(matches!(err, Error::Estimation(ref m) if m.contains("projected normal")));
        assert!(blue_pinv(&l_u, &l_y, &Matrix::identity(1)).is_err());

        let not_spd = Matrix::from_diag(&[1.0, -1.0, 1.0]);
        assert!(constrained_wls(&Matrix::zeros(0, 3), &Matrix::identity(3), &not_spd, &[], &[0.0; 3]).is_err());
    }
}
