//! Dual active-set method for strictly convex QPs (Goldfarb–Idnani).
//!
//! Starts from the unconstrained minimizer and adds violated constraints
//! one at a time while keeping the multipliers dual feasible, so it ends
//! either at the exact optimum or with a proof that no feasible point
//! exists. Used when the ADMM iteration stalls on degenerate instances.

use alloc::vec;
use alloc::vec::Vec;

use super::dense::DenseQp;
use crate::error::Result;
use crate::linalg::{dot, norm_inf, Cholesky, Matrix};

#[derive(Debug, Clone)]
pub(crate) enum DualOutcome {
    Optimal { x: Vec<f64>, y: Vec<f64> },
    Infeasible,
    Stalled,
}

/// One-sided constraint `sign · a_row x ≥ bound`.
#[derive(Debug, Clone, Copy)]
struct Side {
    row: usize,
    sign: f64,
    bound: f64,
}

fn givens(a: f64, b: f64) -> (f64, f64, f64) {
    let h = libm::hypot(a, b);
    if h == 0.0 {
        (1.0, 0.0, 0.0)
    } else {
        (a / h, b / h, h)
    }
}

fn rotate_cols(j: &mut Matrix, c1: usize, c2: usize, c: f64, s: f64) {
    for i in 0..j.rows() {
        let (a, b) = (j[(i, c1)], j[(i, c2)]);
        j[(i, c1)] = c * a + s * b;
        j[(i, c2)] = -s * a + c * b;
    }
}

pub(crate) fn solve_dual_active_set(qp: &DenseQp, max_iter: usize) -> Result<DualOutcome> {
    let n = qp.n();
    let chol = match Cholesky::new(&qp.p) {
        Ok(c) => c,
        Err(_) => {
            let mut reg = qp.p.clone();
            let eps = 1e-12 * qp.p.max_abs().max(1.0);
            for i in 0..n {
                reg[(i, i)] += eps;
            }
            Cholesky::new(&reg)?
        }
    };
    // J = L⁻ᵀ
    let linv_t = chol.solve_lower_mat(&Matrix::identity(n)).transpose();
    let mut jm = linv_t;
    let mut x: Vec<f64> = chol.solve(&qp.q).iter().map(|v| -v).collect();

    let mut sides = Vec::new();
    for i in 0..qp.m() {
        if qp.l[i].is_finite() {
            sides.push(Side { row: i, sign: 1.0, bound: qp.l[i] });
        }
        if qp.u[i].is_finite() {
            sides.push(Side { row: i, sign: -1.0, bound: -qp.u[i] });
        }
    }
    let normal = |s: &Side| -> Vec<f64> { qp.a.row(s.row).iter().map(|v| s.sign * v).collect() };
    let slack = |s: &Side, x: &[f64]| s.sign * dot(qp.a.row(s.row), x) - s.bound;

    let mut active: Vec<usize> = Vec::new();
    let mut mu: Vec<f64> = Vec::new();
    let mut r_mat = Matrix::zeros(n, n);
    let eps = 1e-13;
    let mut iterations = 0;

    loop {
        // most violated constraint
        let mut pick: Option<(usize, f64)> = None;
        for (idx, s) in sides.iter().enumerate() {
            if active.contains(&idx) {
                continue;
            }
            let v = slack(s, &x);
            let tol = 1e-11 * (1.0 + s.bound.abs());
            if v < -tol && pick.is_none_or(|(_, w)| v < w) {
                pick = Some((idx, v));
            }
        }
        let Some((p, _)) = pick else {
            let mut y = vec![0.0; qp.m()];
            for (a, m) in active.iter().zip(&mu) {
                let s = sides[*a];
                y[s.row] += -s.sign * m;
            }
            return Ok(DualOutcome::Optimal { x, y });
        };
        let np = normal(&sides[p]);
        let mut mu_p = 0.0;
        loop {
            iterations += 1;
            if iterations > max_iter {
                return Ok(DualOutcome::Stalled);
            }
            let q = active.len();
            let d = jm.t_mul_vec(&np);
            // primal direction z = J2 d2, dual direction r = R⁻¹ d1
            let mut z = vec![0.0; n];
            for j in q..n {
                for i in 0..n {
                    z[i] += jm[(i, j)] * d[j];
                }
            }
            let mut r = vec![0.0; q];
            for i in (0..q).rev() {
                let mut acc = d[i];
                for k in i + 1..q {
                    acc -= r_mat[(i, k)] * r[k];
                }
                r[i] = acc / r_mat[(i, i)];
            }
            let mut t1 = f64::INFINITY;
            let mut drop_at = None;
            for j in 0..q {
                if r[j] > eps && mu[j] / r[j] < t1 {
                    t1 = mu[j] / r[j];
                    drop_at = Some(j);
                }
            }
            let zn = dot(&z, &np);
            let t2 = if norm_inf(&z) > eps * (1.0 + norm_inf(&np)) && zn > 0.0 {
                -slack(&sides[p], &x) / zn
            } else {
                f64::INFINITY
            };
            let t = t1.min(t2);
            if !t.is_finite() {
                return Ok(DualOutcome::Infeasible);
            }
            for j in 0..q {
                mu[j] -= t * r[j];
            }
            mu_p += t;
            if t2.is_finite() {
                for i in 0..n {
                    x[i] += t * z[i];
                }
            }
            if t2 <= t1 {
                // add p: rotate d so that only its first q+1 entries are nonzero
                let mut d = d;
                for j in (q + 1..n).rev() {
                    if d[j] == 0.0 {
                        continue;
                    }
                    let (c, s, h) = givens(d[j - 1], d[j]);
                    d[j - 1] = h;
                    d[j] = 0.0;
                    rotate_cols(&mut jm, j - 1, j, c, s);
                }
                for i in 0..=q {
                    r_mat[(i, q)] = d[i];
                }
                active.push(p);
                mu.push(mu_p);
                break;
            }
            // partial step: drop the blocking constraint and retry p
            let k = drop_at.expect("finite partial step has a blocking constraint");
            active.remove(k);
            mu.remove(k);
            for c in k..q - 1 {
                for i in 0..n {
                    r_mat[(i, c)] = r_mat[(i, c + 1)];
                }
            }
            for i in 0..n {
                r_mat[(i, q - 1)] = 0.0;
            }
            for j in k..q - 1 {
                let (c, s, h) = givens(r_mat[(j, j)], r_mat[(j + 1, j)]);
                r_mat[(j, j)] = h;
                r_mat[(j + 1, j)] = 0.0;
                for col in j + 1..q - 1 {
                    let (a, b) = (r_mat[(j, col)], r_mat[(j + 1, col)]);
                    r_mat[(j, col)] = c * a + s * b;
                    r_mat[(j + 1, col)] = -s * a + c * b;
                }
                rotate_cols(&mut jm, j, j + 1, c, s);
            }
        }
    }
}
