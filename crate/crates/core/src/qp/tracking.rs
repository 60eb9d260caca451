//! Output-tracking QP of the receding-horizon controllers.
//!
//! Cost: `(ŷ − r_y)ᵀQ(ŷ − r_y) + (u − r_u)ᵀR(u − r_u) + σᵀΛσ` with the
//! prediction equality `ŷ = P1 z + P2 u + σ`. With the slack enabled the
//! decision vector is `(u, ŷ)` and `σ` is substituted out; without it,
//! `ŷ = P1 z + P2 u` exactly and the decision vector is `u` alone, with the
//! output box imposed through the rows of `P2`.
//!
//! The objective is divided by `max(1, max|H|)` before solving, so solver
//! tolerances and the reported KKT residual refer to that normalized problem.

use alloc::vec;
use alloc::vec::Vec;

use super::dense::{dense_kkt_residual, AdmmSolver, DenseQp, QpSettings, QpStatus, WarmStart};
use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky, Matrix};

/// Per-component lower/upper bounds; infinite entries are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxBounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::dim("box bound length", lo.len(), hi.len()));
        }
        if lo.iter().chain(&hi).any(|v| v.is_nan()) {
            return Err(Error::Argument("box bound is NaN".into()));
        }
        Ok(BoxBounds { lo, hi })
    }

    pub fn unbounded(len: usize) -> Self {
        BoxBounds { lo: vec![f64::NEG_INFINITY; len], hi: vec![f64::INFINITY; len] }
    }

    /// Per-sample bounds repeated over `count` samples.
    pub fn repeat(lo: &[f64], hi: &[f64], count: usize) -> Result<Self> {
        BoxBounds::new(lo.repeat(count), hi.repeat(count))
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    pub fn is_ordered(&self) -> bool {
        self.lo.iter().zip(&self.hi).all(|(l, h)| l <= h)
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        v.len() == self.len() && v.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (l, h))| *x >= l - tol && *x <= h + tol)
    }

    pub fn clamp(&self, v: &[f64]) -> Vec<f64> {
        v.iter().zip(self.lo.iter().zip(&self.hi)).map(|(x, (l, h))| x.max(*l).min(*h)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct TrackingQp {
    pub p1: Matrix,
    pub p2: Matrix,
    pub z_ini: Vec<f64>,
    /// Stacked output reference over the horizon.
    pub r_y: Vec<f64>,
    /// Stacked input reference over the horizon.
    pub r_u: Vec<f64>,
    pub q: Matrix,
    pub r: Matrix,
    pub lambda: Matrix,
    pub u_box: BoxBounds,
    pub y_box: BoxBounds,
    pub use_slack: bool,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub u_n: Vec<f64>,
    pub y_hat: Vec<f64>,
    /// Empty when the slack is disabled.
    pub sigma_y: Vec<f64>,
    pub objective: f64,
    pub status: QpStatus,
    pub iterations: usize,
    pub kkt_residual: f64,
    /// Decision vector and duals of the normalized problem.
    pub x: Vec<f64>,
    pub duals: Vec<f64>,
}

impl TrackingQp {
    pub fn nu(&self) -> usize {
        self.p2.cols()
    }

    pub fn ny(&self) -> usize {
        self.p2.rows()
    }

    pub fn validate(&self) -> Result<()> {
        let (ny, nu) = (self.ny(), self.nu());
        if self.p1.rows() != ny {
            return Err(Error::dim("P1 rows", ny, self.p1.rows()));
        }
        if self.z_ini.len() != self.p1.cols() {
            return Err(Error::dim("z_ini length", self.p1.cols(), self.z_ini.len()));
        }
        if self.r_y.len() != ny {
            return Err(Error::dim("output reference length", ny, self.r_y.len()));
        }
        if self.r_u.len() != nu {
            return Err(Error::dim("input reference length", nu, self.r_u.len()));
        }
        for (name, w, d) in [("Q", &self.q, ny), ("R", &self.r, nu), ("Lambda", &self.lambda, ny)] {
            if w.shape() != (d, d) {
                return Err(Error::dim(name, d, w.rows()));
            }
            w.check_finite()?;
            if !w.is_symmetric(1e-12 * w.max_abs().max(1.0)) {
                return Err(Error::Argument(alloc::format!("weight {name} is not symmetric")));
            }
        }
        for (name, w) in [("Q", &self.q), ("Lambda", &self.lambda)] {
            Cholesky::new(w)
                .map_err(|_| Error::Argument(alloc::format!("weight {name} is not positive definite")))?;
        }
        if self.r.diagonal().iter().any(|d| *d < 0.0) {
            return Err(Error::Argument("weight R has a negative diagonal entry".into()));
        }
        if self.u_box.len() != nu {
            return Err(Error::dim("input box length", nu, self.u_box.len()));
        }
        if self.y_box.len() != ny {
            return Err(Error::dim("output box length", ny, self.y_box.len()));
        }
        if self.z_ini.iter().chain(&self.r_y).chain(&self.r_u).any(|v| !v.is_finite()) {
            return Err(Error::Argument("QP data is not finite".into()));
        }
        self.p1.check_finite()?;
        self.p2.check_finite()
    }

    /// Free response `P1 z`.
    pub fn free_response(&self) -> Vec<f64> {
        self.p1.mul_vec(&self.z_ini)
    }

    /// Hessian of the unnormalized problem (depends only on P2 and weights).
    pub fn hessian(&self) -> Matrix {
        let p2 = &self.p2;
        if self.use_slack {
            let (nu, ny) = (self.nu(), self.ny());
            let lp2 = self.lambda.matmul(p2);
            let mut h = Matrix::zeros(nu + ny, nu + ny);
            h.set_block(0, 0, &(&self.r + &p2.t_matmul(&lp2)));
            h.set_block(0, nu, &lp2.transpose().scale(-1.0));
            h.set_block(nu, 0, &lp2.scale(-1.0));
            h.set_block(nu, nu, &(&self.q + &self.lambda));
            symmetrize(h.scale(2.0))
        } else {
            let qp2 = self.q.matmul(p2);
            symmetrize((&p2.t_matmul(&qp2) + &self.r).scale(2.0))
        }
    }

    pub fn constraint_matrix(&self) -> Matrix {
        if self.use_slack {
            Matrix::identity(self.nu() + self.ny())
        } else {
            Matrix::vstack(&[&Matrix::identity(self.nu()), &self.p2])
        }
    }

    fn gradient(&self, c: &[f64]) -> Vec<f64> {
        let ru = self.r.mul_vec(&self.r_u);
        if self.use_slack {
            let lc = self.lambda.mul_vec(c);
            let qr = self.q.mul_vec(&self.r_y);
            let mut g: Vec<f64> = self.p2.t_mul_vec(&lc).iter().zip(&ru).map(|(a, b)| 2.0 * (a - b)).collect();
            g.extend(qr.iter().zip(&lc).map(|(a, b)| -2.0 * (a + b)));
            g
        } else {
            let e: Vec<f64> = c.iter().zip(&self.r_y).map(|(a, b)| a - b).collect();
            let qe = self.q.mul_vec(&e);
            self.p2.t_mul_vec(&qe).iter().zip(&ru).map(|(a, b)| 2.0 * (a - b)).collect()
        }
    }

    fn bounds(&self, c: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut l = self.u_box.lo.clone();
        let mut u = self.u_box.hi.clone();
        if self.use_slack {
            l.extend_from_slice(&self.y_box.lo);
            u.extend_from_slice(&self.y_box.hi);
        } else {
            l.extend(self.y_box.lo.iter().zip(c).map(|(a, b)| a - b));
            u.extend(self.y_box.hi.iter().zip(c).map(|(a, b)| a - b));
        }
        (l, u)
    }

    /// Normalized dense form and the objective scale it was divided by.
    pub fn to_dense(&self) -> (DenseQp, f64) {
        let h = self.hessian();
        let scale = cost_scale(&h);
        let c = self.free_response();
        let q: Vec<f64> = self.gradient(&c).iter().map(|g| g / scale).collect();
        let (l, u) = self.bounds(&c);
        (DenseQp { p: h.scale(1.0 / scale), q, a: self.constraint_matrix(), l, u }, scale)
    }

    /// Tracking cost of an input sequence and constrained output.
    pub fn objective(&self, u_n: &[f64], y_hat: &[f64]) -> f64 {
        let ey: Vec<f64> = y_hat.iter().zip(&self.r_y).map(|(a, b)| a - b).collect();
        let eu: Vec<f64> = u_n.iter().zip(&self.r_u).map(|(a, b)| a - b).collect();
        let mut cost = dot(&ey, &self.q.mul_vec(&ey)) + dot(&eu, &self.r.mul_vec(&eu));
        if self.use_slack {
            let sigma = self.slack(u_n, y_hat);
            cost += dot(&sigma, &self.lambda.mul_vec(&sigma));
        }
        cost
    }

    /// `ŷ − P1 z − P2 u`.
    pub fn slack(&self, u_n: &[f64], y_hat: &[f64]) -> Vec<f64> {
        let pred = self.p2.mul_vec(u_n);
        let c = self.free_response();
        y_hat.iter().zip(pred.iter().zip(&c)).map(|(y, (p, c))| y - p - c).collect()
    }

    fn unpack(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let nu = self.nu();
        let u_n = x[..nu].to_vec();
        let y_hat = if self.use_slack {
            x[nu..].to_vec()
        } else {
            let c = self.free_response();
            self.p2.mul_vec(&u_n).iter().zip(&c).map(|(a, b)| a + b).collect()
        };
        (u_n, y_hat)
    }

    /// Projection of the references onto the boxes.
    pub fn cold_start(&self) -> Vec<f64> {
        let mut x = self.u_box.clamp(&self.r_u);
        if self.use_slack {
            x.extend(self.y_box.clamp(&self.r_y));
        }
        x
    }

    fn finish(&self, raw: super::dense::RawSolution) -> QpSolution {
        let (u_n, y_hat) = self.unpack(&raw.x);
        let sigma_y = if self.use_slack { self.slack(&u_n, &y_hat) } else { Vec::new() };
        let objective = self.objective(&u_n, &y_hat);
        QpSolution {
            u_n,
            y_hat,
            sigma_y,
            objective,
            status: raw.status,
            iterations: raw.iterations,
            kkt_residual: raw.kkt_residual,
            x: raw.x,
            duals: raw.y,
        }
    }
}

fn symmetrize(h: Matrix) -> Matrix {
    let n = h.rows();
    Matrix::from_fn(n, n, |i, j| 0.5 * (h[(i, j)] + h[(j, i)]))
}

fn cost_scale(h: &Matrix) -> f64 {
    h.max_abs().max(1.0)
}

/// KKT residual of a solution on the normalized problem.
pub fn kkt_residual(qp: &TrackingQp, sol: &QpSolution) -> f64 {
    let (dense, _) = qp.to_dense();
    if sol.x.len() != dense.n() || sol.duals.len() != dense.m() {
        return f64::INFINITY;
    }
    dense_kkt_residual(&dense, &sol.x, &sol.duals)
}

/// One-shot solve from the cold start.
pub fn solve_tracking_qp(qp: &TrackingQp) -> Result<QpSolution> {
    TrackingSolver::new(qp, QpSettings::default())?.solve(qp)
}

/// Solver for a sequence of tracking QPs sharing `P2` and the weights.
/// Keeps the Hessian factorization and warm-starts each solve from the
/// previous solution shifted by one sample.
#[derive(Debug, Clone)]
pub struct TrackingSolver {
    admm: AdmmSolver,
    scale: f64,
    use_slack: bool,
    nu: usize,
    ny: usize,
    block_u: usize,
    block_y: usize,
    previous: Option<WarmStart>,
}

impl TrackingSolver {
    pub fn new(template: &TrackingQp, settings: QpSettings) -> Result<Self> {
        template.validate()?;
        let h = template.hessian();
        let scale = cost_scale(&h);
        let admm = AdmmSolver::new(h.scale(1.0 / scale), template.constraint_matrix(), settings)?;
        Ok(TrackingSolver {
            admm,
            scale,
            use_slack: template.use_slack,
            nu: template.nu(),
            ny: template.ny(),
            block_u: 0,
            block_y: 0,
            previous: None,
        })
    }

    /// Sample sizes used to shift warm starts (`n_u`, `n_y`); without them
    /// the previous solution is reused unshifted.
    pub fn with_blocks(mut self, n_u: usize, n_y: usize) -> Self {
        self.block_u = n_u;
        self.block_y = n_y;
        self
    }

    pub fn reset(&mut self) {
        self.previous = None;
    }

    pub fn solve(&mut self, qp: &TrackingQp) -> Result<QpSolution> {
        qp.validate()?;
        if qp.use_slack != self.use_slack || qp.nu() != self.nu || qp.ny() != self.ny {
            return Err(Error::Argument("QP structure differs from the solver's".into()));
        }
        let c = qp.free_response();
        let q: Vec<f64> = qp.gradient(&c).iter().map(|g| g / self.scale).collect();
        let (l, u) = qp.bounds(&c);
        let warm = match &self.previous {
            Some(prev) => self.shifted(prev),
            None => WarmStart { x: qp.cold_start(), y: Vec::new() },
        };
        let raw = self.admm.solve(&q, &l, &u, Some(&warm))?;
        if raw.status == QpStatus::Solved {
            self.previous = Some(WarmStart { x: raw.x.clone(), y: raw.y.clone() });
        } else {
            self.previous = None;
        }
        Ok(qp.finish(raw))
    }

    fn shifted(&self, prev: &WarmStart) -> WarmStart {
        if self.block_u == 0 {
            return prev.clone();
        }
        let nu = self.nu;
        let mut x = shift_blocks(&prev.x[..nu], self.block_u);
        let mut y = shift_blocks(&prev.y[..nu], self.block_u);
        if self.use_slack {
            x.extend(shift_blocks(&prev.x[nu..], self.block_y));
            y.extend(shift_blocks(&prev.y[nu..], self.block_y));
        } else {
            y.extend(shift_blocks(&prev.y[nu..], self.block_y));
        }
        WarmStart { x, y }
    }
}

/// Drops the first block and repeats the last one.
fn shift_blocks(v: &[f64], block: usize) -> Vec<f64> {
    if v.len() <= block || block == 0 {
        return v.to_vec();
    }
    let mut out = v[block..].to_vec();
    out.extend_from_slice(&v[v.len() - block..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(u_box: BoxBounds) -> TrackingQp {
        TrackingQp {
            p1: Matrix::zeros(1, 1),
            p2: Matrix::from_rows(&[[2.0]]).unwrap(),
            z_ini: vec![0.0],
            r_y: vec![1.0],
            r_u: vec![0.0],
            q: Matrix::identity(1),
            r: Matrix::zeros(1, 1),
            lambda: Matrix::identity(1),
            u_box,
            y_box: BoxBounds::unbounded(1),
            use_slack: false,
        }
    }

    #[test]
    fn scalar_substitution() {
        let qp = scalar(BoxBounds::unbounded(1));
        let s = solve_tracking_qp(&qp).unwrap();
        assert_eq!(s.status, QpStatus::Solved);
        assert!((s.u_n[0] - 0.5).abs() < 1e-9 && (s.y_hat[0] - 1.0).abs() < 1e-9);
        assert!(s.objective < 1e-16);
    }

    #[test]
    fn scalar_with_active_box() {
        let qp = scalar(BoxBounds::new(vec![-0.2], vec![0.2]).unwrap());
        let s = solve_tracking_qp(&qp).unwrap();
        assert_eq!(s.status, QpStatus::Solved);
        assert!((s.u_n[0] - 0.2).abs() < 1e-9 && (s.y_hat[0] - 0.4).abs() < 1e-9);
        assert!(kkt_residual(&qp, &s) < 1e-9);
    }

    #[test]
    fn shift_repeats_last_block() {
        assert_eq!(shift_blocks(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 2), vec![3.0, 4.0, 5.0, 6.0, 5.0, 6.0]);
    }
}
