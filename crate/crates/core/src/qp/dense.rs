//! Dense convex QP `min ½ xᵀPx + qᵀx  s.t.  l ≤ Ax ≤ u` by ADMM
//! (operator splitting with a cached factorization of `P + σI + ρAᵀA`),
//! with active-set polishing of the iterates. Iterations that stall on
//! degenerate instances hand over to an exact dual active-set method.
//!
//! Dual sign convention: stationarity reads `Px + q + Aᵀy = 0`, so `y_i > 0`
//! on an active upper bound and `y_i < 0` on an active lower bound.

use alloc::vec;
use alloc::vec::Vec;

use super::dual_active_set::{solve_dual_active_set, DualOutcome};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, Cholesky, Lu, Matrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpSettings {
    pub rho: f64,
    pub sigma: f64,
    /// Over-relaxation factor in `(0, 2)`.
    pub alpha: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    /// Tolerance of the primal infeasibility certificate.
    pub eps_pinf: f64,
    pub max_iter: usize,
    /// KKT residual accepted from a polished solution.
    pub polish_tol: f64,
    /// Maximum active-set corrections per polishing attempt.
    pub polish_passes: usize,
    /// ADMM iterations after which the exact dual active-set method is
    /// tried; `0` disables it.
    pub fallback_after: usize,
}

impl Default for QpSettings {
    fn default() -> Self {
        QpSettings {
            rho: 1.0,
            sigma: 1e-6,
            alpha: 1.6,
            eps_abs: 1e-8,
            eps_rel: 1e-6,
            eps_pinf: 1e-5,
            max_iter: 20_000,
            polish_tol: 1e-9,
            polish_passes: 12,
            fallback_after: 400,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Solved,
    MaxIters,
    Infeasible,
}

impl QpStatus {
    pub fn name(self) -> &'static str {
        match self {
            QpStatus::Solved => "solved",
            QpStatus::MaxIters => "max_iters",
            QpStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone)]
pub struct DenseQp {
    pub p: Matrix,
    pub q: Vec<f64>,
    pub a: Matrix,
    pub l: Vec<f64>,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RawSolution {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub status: QpStatus,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub polished: bool,
}

/// Warm-start point; `y` may be empty to start the duals at zero.
#[derive(Debug, Clone, Default)]
pub struct WarmStart {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl DenseQp {
    pub fn n(&self) -> usize {
        self.p.rows()
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.n(), self.m());
        if self.p.cols() != n {
            return Err(Error::dim("QP Hessian (square)", n, self.p.cols()));
        }
        if self.q.len() != n {
            return Err(Error::dim("QP gradient length", n, self.q.len()));
        }
        if self.a.cols() != n {
            return Err(Error::dim("QP constraint columns", n, self.a.cols()));
        }
        if self.l.len() != m || self.u.len() != m {
            return Err(Error::dim("QP bound length", m, self.l.len().min(self.u.len())));
        }
        if !self.p.is_symmetric(1e-9 * self.p.max_abs().max(1.0)) {
            return Err(Error::Argument("QP Hessian is not symmetric".into()));
        }
        self.p.check_finite()?;
        self.a.check_finite()?;
        if self.q.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("QP gradient is not finite".into()));
        }
        if self.l.iter().chain(&self.u).any(|v| v.is_nan()) {
            return Err(Error::Argument("QP bound is NaN".into()));
        }
        Ok(())
    }

    pub fn bounds_consistent(&self) -> bool {
        self.l.iter().zip(&self.u).all(|(l, u)| l <= u)
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        0.5 * dot(x, &self.p.mul_vec(x)) + dot(&self.q, x)
    }
}

/// Max of stationarity `‖Px + q + Aᵀy‖∞`, primal bound violation, and
/// complementarity / dual-sign violation.
pub fn dense_kkt_residual(qp: &DenseQp, x: &[f64], y: &[f64]) -> f64 {
    let mut grad = qp.p.mul_vec(x);
    for (g, (q, aty)) in grad.iter_mut().zip(qp.q.iter().zip(qp.a.t_mul_vec(y))) {
        *g += q + aty;
    }
    let mut res = norm_inf(&grad);
    let ax = qp.a.mul_vec(x);
    for i in 0..qp.m() {
        let (l, u, v, yi) = (qp.l[i], qp.u[i], ax[i], y[i]);
        res = res.max(l - v).max(v - u);
        let comp = if yi > 0.0 {
            if u.is_finite() { yi.min((u - v).abs()) } else { yi }
        } else if yi < 0.0 {
            if l.is_finite() { (-yi).min((v - l).abs()) } else { -yi }
        } else {
            0.0
        };
        res = res.max(comp);
    }
    res
}

/// Solver with the factorization of `P + σI + ρAᵀA` cached, so that
/// repeated solves with changing `q`, `l`, `u` cost only substitutions.
#[derive(Debug, Clone)]
pub struct AdmmSolver {
    p: Matrix,
    a: Matrix,
    settings: QpSettings,
    kkt: Cholesky,
}

impl AdmmSolver {
    pub fn new(p: Matrix, a: Matrix, settings: QpSettings) -> Result<Self> {
        let n = p.rows();
        if p.cols() != n || a.cols() != n {
            return Err(Error::dim("QP matrix columns", n, a.cols()));
        }
        let mut k = a.t_matmul(&a).scale(settings.rho);
        for i in 0..n {
            for j in 0..n {
                k[(i, j)] += p[(i, j)];
            }
            k[(i, i)] += settings.sigma;
        }
        let kkt = Cholesky::new(&k)
            .map_err(|_| Error::Argument("QP Hessian is not positive semidefinite".into()))?;
        Ok(AdmmSolver { p, a, settings, kkt })
    }

    pub fn settings(&self) -> &QpSettings {
        &self.settings
    }

    pub fn solve(&self, q: &[f64], l: &[f64], u: &[f64], warm: Option<&WarmStart>) -> Result<RawSolution> {
        let qp = DenseQp { p: self.p.clone(), q: q.to_vec(), a: self.a.clone(), l: l.to_vec(), u: u.to_vec() };
        self.solve_problem(&qp, warm)
    }

    pub(crate) fn solve_problem(&self, qp: &DenseQp, warm: Option<&WarmStart>) -> Result<RawSolution> {
        qp.validate()?;
        let (n, m) = (qp.n(), qp.m());
        if !qp.bounds_consistent() {
            return Ok(RawSolution {
                x: vec![0.0; n],
                y: vec![0.0; m],
                status: QpStatus::Infeasible,
                iterations: 0,
                kkt_residual: f64::INFINITY,
                polished: false,
            });
        }
        let s = &self.settings;
        let mut x = match warm {
            Some(w) if w.x.len() == n => w.x.clone(),
            _ => vec![0.0; n],
        };
        let mut y = match warm {
            Some(w) if w.y.len() == m => w.y.clone(),
            _ => vec![0.0; m],
        };
        let mut z = project(&self.a.mul_vec(&x), &qp.l, &qp.u);

        if let Some(w) = warm {
            if w.y.len() == m {
                if let Some(sol) = self.polish(qp, &z, &y, 0) {
                    return Ok(sol);
                }
            }
        }

        let mut next_polish = 10usize;
        let mut y_prev = y.clone();
        for iter in 1..=s.max_iter {
            // x̃ = K⁻¹(σx − q + Aᵀ(ρz − y))
            let w: Vec<f64> = z.iter().zip(&y).map(|(zi, yi)| s.rho * zi - yi).collect();
            let mut rhs = self.a.t_mul_vec(&w);
            for i in 0..n {
                rhs[i] += s.sigma * x[i] - qp.q[i];
            }
            let x_tilde = self.kkt.solve(&rhs);
            let z_tilde = self.a.mul_vec(&x_tilde);
            for i in 0..n {
                x[i] = s.alpha * x_tilde[i] + (1.0 - s.alpha) * x[i];
            }
            y_prev.copy_from_slice(&y);
            for i in 0..m {
                let relaxed = s.alpha * z_tilde[i] + (1.0 - s.alpha) * z[i];
                let z_new = (relaxed + y[i] / s.rho).max(qp.l[i]).min(qp.u[i]);
                y[i] += s.rho * (relaxed - z_new);
                z[i] = z_new;
            }

            if iter % 5 == 0 || iter == s.max_iter {
                if self.converged(qp, &x, &z, &y) {
                    if let Some(sol) = self.polish(qp, &z, &y, iter) {
                        return Ok(sol);
                    }
                    let kkt_residual = dense_kkt_residual(qp, &x, &y);
                    return Ok(RawSolution { x, y, status: QpStatus::Solved, iterations: iter, kkt_residual, polished: false });
                }
                let dy: Vec<f64> = y.iter().zip(&y_prev).map(|(a, b)| a - b).collect();
                if certifies_infeasibility(qp, &dy, s.eps_pinf) {
                    let kkt_residual = dense_kkt_residual(qp, &x, &y);
                    return Ok(RawSolution { x, y, status: QpStatus::Infeasible, iterations: iter, kkt_residual, polished: false });
                }
            }
            if iter == s.fallback_after {
                match solve_dual_active_set(qp, 20 * (n + m) + 100)? {
                    DualOutcome::Optimal { x, y } => {
                        let kkt_residual = dense_kkt_residual(qp, &x, &y);
                        return Ok(RawSolution { x, y, status: QpStatus::Solved, iterations: iter, kkt_residual, polished: true });
                    }
                    DualOutcome::Infeasible => {
                        let kkt_residual = dense_kkt_residual(qp, &x, &y);
                        return Ok(RawSolution { x, y, status: QpStatus::Infeasible, iterations: iter, kkt_residual, polished: false });
                    }
                    DualOutcome::Stalled => {}
                }
            }
            if iter == next_polish {
                next_polish *= 2;
                if let Some(sol) = self.polish(qp, &z, &y, iter) {
                    return Ok(sol);
                }
            }
        }
        if let Some(sol) = self.polish(qp, &z, &y, s.max_iter) {
            return Ok(sol);
        }
        let kkt_residual = dense_kkt_residual(qp, &x, &y);
        Ok(RawSolution { x, y, status: QpStatus::MaxIters, iterations: s.max_iter, kkt_residual, polished: false })
    }

    fn converged(&self, qp: &DenseQp, x: &[f64], z: &[f64], y: &[f64]) -> bool {
        let s = &self.settings;
        let ax = self.a.mul_vec(x);
        let r_prim = ax.iter().zip(z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let px = self.p.mul_vec(x);
        let aty = self.a.t_mul_vec(y);
        let r_dual = (0..qp.n()).map(|i| (px[i] + qp.q[i] + aty[i]).abs()).fold(0.0, f64::max);
        let eps_prim = s.eps_abs + s.eps_rel * norm_inf(&ax).max(norm_inf(z));
        let eps_dual = s.eps_abs + s.eps_rel * norm_inf(&px).max(norm_inf(&aty)).max(norm_inf(&qp.q));
        r_prim <= eps_prim && r_dual <= eps_dual
    }

    /// Guesses the active set from the iterate and refines it by solving
    /// equality-constrained subproblems until primal feasibility and dual
    /// signs are consistent.
    fn polish(&self, qp: &DenseQp, z: &[f64], y: &[f64], iterations: usize) -> Option<RawSolution> {
        let m = qp.m();
        let mut active: Vec<i8> = (0..m)
            .map(|i| {
                if qp.l[i] == qp.u[i] {
                    1
                } else if qp.l[i].is_finite() && z[i] - qp.l[i] < -y[i] {
                    -1
                } else if qp.u[i].is_finite() && qp.u[i] - z[i] < y[i] {
                    1
                } else {
                    0
                }
            })
            .collect();
        let tol = self.settings.polish_tol;
        for _ in 0..self.settings.polish_passes {
            let (xs, ys) = solve_active(qp, &active)?;
            let ax = qp.a.mul_vec(&xs);
            let mut changed = false;
            for i in 0..m {
                let scale = 1.0 + qp.l[i].abs().min(qp.u[i].abs()).min(ax[i].abs());
                let ptol = tol * scale;
                match active[i] {
                    0 if ax[i] < qp.l[i] - ptol => {
                        active[i] = -1;
                        changed = true;
                    }
                    0 if ax[i] > qp.u[i] + ptol => {
                        active[i] = 1;
                        changed = true;
                    }
                    -1 if qp.l[i] != qp.u[i] && ys[i] > tol => {
                        active[i] = 0;
                        changed = true;
                    }
                    1 if qp.l[i] != qp.u[i] && ys[i] < -tol => {
                        active[i] = 0;
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                let res = dense_kkt_residual(qp, &xs, &ys);
                let scale = 1.0 + norm_inf(&qp.q).max(norm_inf(&xs));
                if res <= tol * scale {
                    return Some(RawSolution {
                        x: xs,
                        y: ys,
                        status: QpStatus::Solved,
                        iterations,
                        kkt_residual: res,
                        polished: true,
                    });
                }
                return None;
            }
        }
        None
    }
}

fn project(v: &[f64], l: &[f64], u: &[f64]) -> Vec<f64> {
    v.iter().zip(l.iter().zip(u)).map(|(x, (lo, hi))| x.max(*lo).min(*hi)).collect()
}

fn certifies_infeasibility(qp: &DenseQp, dy: &[f64], eps: f64) -> bool {
    let ndy = norm_inf(dy);
    if ndy < 1e-12 {
        return false;
    }
    if norm_inf(&qp.a.t_mul_vec(dy)) > eps * ndy {
        return false;
    }
    let mut support = 0.0;
    for i in 0..qp.m() {
        if dy[i] > 0.0 {
            if !qp.u[i].is_finite() {
                return false;
            }
            support += qp.u[i] * dy[i];
        } else if dy[i] < 0.0 {
            if !qp.l[i].is_finite() {
                return false;
            }
            support += qp.l[i] * dy[i];
        }
    }
    support < -eps * ndy
}

/// Solves the equality-constrained QP with the active rows held at their
/// bounds, using a lightly regularized KKT system plus iterative refinement.
fn solve_active(qp: &DenseQp, active: &[i8]) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = qp.n();
    let rows: Vec<usize> = (0..qp.m()).filter(|&i| active[i] != 0).collect();
    let k = rows.len();
    let dim = n + k;
    let delta = 1e-11 * (1.0 + qp.p.max_abs());
    let mut kkt = Matrix::zeros(dim, dim);
    kkt.set_block(0, 0, &qp.p);
    for (r, &i) in rows.iter().enumerate() {
        for j in 0..n {
            let v = qp.a[(i, j)];
            kkt[(n + r, j)] = v;
            kkt[(j, n + r)] = v;
        }
    }
    let mut reg = kkt.clone();
    for i in 0..n {
        reg[(i, i)] += delta;
    }
    for r in 0..k {
        reg[(n + r, n + r)] -= delta;
    }
    let lu = Lu::new(&reg).ok()?;
    let mut rhs: Vec<f64> = qp.q.iter().map(|v| -v).collect();
    for &i in &rows {
        rhs.push(if active[i] < 0 { qp.l[i] } else { qp.u[i] });
    }
    let mut sol = lu.solve(&rhs);
    for _ in 0..3 {
        let kx = kkt.mul_vec(&sol);
        let r: Vec<f64> = rhs.iter().zip(&kx).map(|(a, b)| a - b).collect();
        let d = lu.solve(&r);
        for (s, di) in sol.iter_mut().zip(d) {
            *s += di;
        }
    }
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut y = vec![0.0; qp.m()];
    for (r, &i) in rows.iter().enumerate() {
        y[i] = sol[n + r];
    }
    sol.truncate(n);
    Some((sol, y))
}
