//! Thin singular value decomposition.
//!
//! A wide matrix is first reduced by Householder LQ, `A = L·Qo`, and the
//! square factor `L` is diagonalized with one-sided (Hestenes) Jacobi
//! rotations. The reduction keeps the cost linear in the long dimension,
//! which matters for Hankel matrices with thousands of columns. Tall inputs
//! are handled through their transpose.

use alloc::vec;
use alloc::vec::Vec;

use super::lq::{lq_factor, lq_lower};
use super::matrix::{dot, norm2, Matrix};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// `A = W · diag(sigma) · Vᵀ` with `W` (m×p) and `V` (n×p) having
/// orthonormal columns, p = min(m, n), `sigma` non-increasing.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub w: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

/// Singular triplets split into a signal part (first `rank`) and a residual part.
#[derive(Debug, Clone)]
pub struct PartitionedSvd {
    pub w1: Matrix,
    pub sigma1: Vec<f64>,
    pub v1: Matrix,
    pub w2: Matrix,
    pub sigma2: Vec<f64>,
    pub v2: Matrix,
    pub rank: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Job {
    Values,
    Left,
    Full,
}

struct Jacobi {
    // rows are the columns of the matrix being orthogonalized
    g: Matrix,
    // rows are the columns of the accumulated right rotation
    vt: Option<Matrix>,
}

fn jacobi_sweeps(jac: &mut Jacobi) -> Result<()> {
    let n = jac.g.rows();
    let tol = f64::EPSILON * libm::sqrt(jac.g.cols().max(1) as f64);
    let mut norms: Vec<f64> = (0..n).map(|i| dot(jac.g.row(i), jac.g.row(i))).collect();
    for sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = norms[i];
                let beta = norms[j];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(jac.g.row(i), jac.g.row(j));
                if gamma.abs() <= tol * libm::sqrt(alpha) * libm::sqrt(beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate_rows(&mut jac.g, i, j, c, s);
                if let Some(vt) = jac.vt.as_mut() {
                    rotate_rows(vt, i, j, c, s);
                }
                norms[i] = dot(jac.g.row(i), jac.g.row(i));
                norms[j] = dot(jac.g.row(j), jac.g.row(j));
            }
        }
        if !rotated {
            return Ok(());
        }
        if sweep + 1 == MAX_SWEEPS {
            break;
        }
    }
    Err(Error::SvdNoConvergence {
        iterations: MAX_SWEEPS,
    })
}

fn rotate_rows(m: &mut Matrix, i: usize, j: usize, c: f64, s: f64) {
    let cols = m.cols();
    let data = m.as_mut_slice();
    let (head, tail) = data.split_at_mut(j * cols);
    let ri = &mut head[i * cols..(i + 1) * cols];
    let rj = &mut tail[..cols];
    for (a, b) in ri.iter_mut().zip(rj.iter_mut()) {
        let x = *a;
        let y = *b;
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// Left vectors (as rows), values, and optional right vectors (as rows) of a
/// square or wide-reduced factor.
struct RawSvd {
    sigma: Vec<f64>,
    u_rows: Option<Matrix>,
    v_rows: Option<Matrix>,
}

fn svd_square_lower(l: &Matrix, job: Job) -> Result<RawSvd> {
    let p = l.cols();
    let mut jac = Jacobi {
        g: l.transpose(),
        vt: (job == Job::Full).then(|| Matrix::identity(p)),
    };
    jacobi_sweeps(&mut jac)?;
    let mut sigma: Vec<f64> = (0..p).map(|i| norm2(jac.g.row(i))).collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).unwrap_or(core::cmp::Ordering::Equal));
    sigma = order.iter().map(|&k| sigma[k]).collect();
    let u_rows = if job == Job::Values {
        None
    } else {
        let mut u = Matrix::zeros(p, l.rows());
        let mut missing = Vec::new();
        for (dst, &src) in order.iter().enumerate() {
            let s = sigma[dst];
            if s > f64::MIN_POSITIVE * 1e4 {
                let row = u.row_mut(dst);
                for (x, g) in row.iter_mut().zip(jac.g.row(src)) {
                    *x = g / s;
                }
            } else {
                missing.push(dst);
            }
        }
        complete_orthonormal_rows(&mut u, &missing);
        Some(u)
    };
    let v_rows = jac.vt.map(|vt| {
        let mut v = Matrix::zeros(p, p);
        for (dst, &src) in order.iter().enumerate() {
            v.row_mut(dst).copy_from_slice(vt.row(src));
        }
        v
    });
    Ok(RawSvd {
        sigma,
        u_rows,
        v_rows,
    })
}

/// Fills the listed rows with unit vectors orthogonal to all other rows.
fn complete_orthonormal_rows(u: &mut Matrix, missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let n = u.cols();
    let mut filled: Vec<usize> = (0..u.rows()).filter(|i| !missing.contains(i)).collect();
    for &dst in missing {
        let mut best: Option<Vec<f64>> = None;
        let mut best_norm = 0.0;
        for e in 0..n {
            let mut cand = vec![0.0; n];
            cand[e] = 1.0;
            for _ in 0..2 {
                for &k in &filled {
                    let proj = dot(&cand, u.row(k));
                    for (c, q) in cand.iter_mut().zip(u.row(k)) {
                        *c -= proj * q;
                    }
                }
            }
            let nrm = norm2(&cand);
            if nrm > best_norm + 1e-3 {
                best_norm = nrm;
                best = Some(cand);
            }
            if best_norm > 0.7 {
                break;
            }
        }
        let cand = best.expect("complement exists while rows < dimension");
        for (x, c) in u.row_mut(dst).iter_mut().zip(&cand) {
            *x = c / best_norm;
        }
        filled.push(dst);
    }
}

/// Sign convention: the first entry of each left singular vector whose
/// magnitude exceeds 1e-10 is made non-negative.
fn fix_signs(u_rows: &mut Matrix, v_rows: Option<&mut Matrix>) {
    let mut flips = Vec::new();
    for i in 0..u_rows.rows() {
        let first = u_rows.row(i).iter().find(|x| x.abs() > 1e-10).copied();
        if first.is_some_and(|x| x < 0.0) {
            u_rows.row_mut(i).iter_mut().for_each(|x| *x = -*x);
            flips.push(i);
        }
    }
    if let Some(v) = v_rows {
        for i in flips {
            v.row_mut(i).iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn svd_wide(a: &Matrix, job: Job) -> Result<RawSvd> {
    // a is m×n with m <= n
    if job == Job::Full {
        let f = lq_factor(a);
        let mut raw = svd_square_lower(&f.l, Job::Full)?;
        // right vectors of A: rows of Vlᵀ·Qo
        let vl_rows = raw.v_rows.take().expect("full job");
        raw.v_rows = Some(vl_rows.matmul(&f.qo));
        Ok(raw)
    } else {
        let l = lq_lower(a);
        svd_square_lower(&l, job)
    }
}

fn check_input(a: &Matrix) -> Result<()> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::Argument("SVD of an empty matrix".into()));
    }
    a.check_finite()
}

/// Thin SVD with both singular bases.
pub fn svd_full(a: &Matrix) -> Result<SvdFactors> {
    check_input(a)?;
    if a.rows() <= a.cols() {
        let mut raw = svd_wide(a, Job::Full)?;
        let mut u = raw.u_rows.take().expect("left vectors");
        let mut v = raw.v_rows.take().expect("right vectors");
        fix_signs(&mut u, Some(&mut v));
        Ok(SvdFactors {
            w: u.transpose(),
            sigma: raw.sigma,
            v: v.transpose(),
        })
    } else {
        let at = a.transpose();
        let mut raw = svd_wide(&at, Job::Full)?;
        // Aᵀ = U Σ Vᵀ  =>  A = V Σ Uᵀ
        let mut w_rows = raw.v_rows.take().expect("right vectors");
        let mut v_rows = raw.u_rows.take().expect("left vectors");
        fix_signs(&mut w_rows, Some(&mut v_rows));
        Ok(SvdFactors {
            w: w_rows.transpose(),
            sigma: raw.sigma,
            v: v_rows.transpose(),
        })
    }
}

/// Left singular vectors (m×p) and singular values, without the right basis.
pub fn svd_left(a: &Matrix) -> Result<(Matrix, Vec<f64>)> {
    check_input(a)?;
    if a.rows() <= a.cols() {
        let raw = svd_wide(a, Job::Left)?;
        let mut u = raw.u_rows.expect("left vectors");
        fix_signs(&mut u, None);
        Ok((u.transpose(), raw.sigma))
    } else {
        let f = svd_full(a)?;
        Ok((f.w, f.sigma))
    }
}

/// Singular values only, non-increasing.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    check_input(a)?;
    let raw = if a.rows() <= a.cols() {
        svd_wide(a, Job::Values)?
    } else {
        svd_wide(&a.transpose(), Job::Values)?
    };
    Ok(raw.sigma)
}

/// Numerical rank at a relative threshold `rel_tol · σ_max`.
pub fn numerical_rank(sigma: &[f64], rel_tol: f64) -> usize {
    let smax = sigma.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Splits the first `r` singular triplets from the rest.
pub fn svd_partition(f: &SvdFactors, r: usize) -> Result<PartitionedSvd> {
    let p = f.sigma.len();
    if r == 0 || r > p {
        return Err(Error::Argument(alloc::format!(
            "partition rank {r} outside 1..={p}"
        )));
    }
    let m = f.w.rows();
    let n = f.v.rows();
    Ok(PartitionedSvd {
        w1: f.w.block(0..m, 0..r),
        sigma1: f.sigma[..r].to_vec(),
        v1: f.v.block(0..n, 0..r),
        w2: f.w.block(0..m, r..p),
        sigma2: f.sigma[r..].to_vec(),
        v2: f.v.block(0..n, r..p),
        rank: r,
    })
}

impl SvdFactors {
    /// `W · diag(σ) · Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        self.w.scale_cols(&self.sigma).matmul_t(&self.v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn identity_has_unit_singular_values() {
        let f = svd_full(&Matrix::identity(3)).unwrap();
        assert_eq!(f.sigma, vec![1.0, 1.0, 1.0]);
        assert!((&f.reconstruct() - &Matrix::identity(3)).max_abs() < 1e-15);
    }

    #[test]
    fn rank_one_outer_product() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        let f = svd_full(&a).unwrap();
        assert!(close(f.sigma[0], 5.0, 1e-14));
        assert!(f.sigma[1].abs() < 1e-14);
        let wtw = f.w.t_matmul(&f.w);
        assert!((&wtw - &Matrix::identity(2)).max_abs() < 1e-12);
        assert!((&f.reconstruct() - &a).max_abs() < 1e-13);
    }

    #[test]
    fn zero_matrix_still_has_orthonormal_bases() {
        let f = svd_full(&Matrix::zeros(2, 4)).unwrap();
        assert_eq!(f.sigma, vec![0.0, 0.0]);
        assert!((&f.w.t_matmul(&f.w) - &Matrix::identity(2)).max_abs() < 1e-14);
        assert!((&f.v.t_matmul(&f.v) - &Matrix::identity(2)).max_abs() < 1e-14);
    }

    #[test]
    fn partition_splits_in_order() {
        let a = Matrix::from_diag(&[5.0, 3.0, 1e-12]);
        let f = svd_full(&a).unwrap();
        let p = svd_partition(&f, 2).unwrap();
        assert_eq!(p.sigma1, vec![5.0, 3.0]);
        assert_eq!(p.sigma2, vec![1e-12]);
        assert!(p.v1.t_matmul(&p.v2).max_abs() < 1e-15);
        let full = svd_partition(&f, 3).unwrap();
        assert_eq!(full.v2.shape(), (3, 0));
        assert!(full.sigma2.is_empty());
        assert!(svd_partition(&f, 0).is_err());
        assert!(svd_partition(&f, 4).is_err());
    }

    #[test]
    fn empty_and_non_finite_inputs_fail() {
        assert!(svd_full(&Matrix::zeros(0, 3)).is_err());
        let mut a = Matrix::zeros(2, 2);
        a[(0, 1)] = f64::INFINITY;
        assert!(singular_values(&a).is_err());
    }

    #[test]
    fn signs_make_first_significant_left_entry_non_negative() {
        let a = Matrix::from_rows(&[[-3.0, 1.0, 0.0], [1.0, -2.0, 4.0]]).unwrap();
        let f = svd_full(&a).unwrap();
        for j in 0..f.w.cols() {
            let col = f.w.col_vec(j);
            let first = col.iter().find(|x| x.abs() > 1e-10).unwrap();
            assert!(*first > 0.0);
        }
        assert!((&f.reconstruct() - &a).max_abs() < 1e-13);
    }
}
