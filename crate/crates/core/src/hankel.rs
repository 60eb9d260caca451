//! Block Hankel matrices of recorded trajectories.
//!
//! Past/future blocks use the one-step output shift: input window `j`
//! covers `u(j..j+T_ini-1)` while the matching output window covers
//! `y(j+1..j+T_ini)`, so the last past output is measured at the same
//! instant the first future input is applied.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::signal::{Signal, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct HankelSet {
    pub up: Matrix,
    pub yp: Matrix,
    pub uf: Matrix,
    pub yf: Matrix,
    pub t_ini: usize,
    pub horizon: usize,
    pub columns: usize,
}

/// Raw samples needed for `columns` Hankel columns.
pub fn required_samples(t_ini: usize, horizon: usize, columns: usize) -> usize {
    t_ini + horizon + columns + 1
}

/// Depth-`depth` block Hankel of `s` starting at sample `start`:
/// column `j` is `col(s(start+j), ..., s(start+j+depth-1))`.
pub fn block_hankel(s: &Signal, start: usize, depth: usize, columns: usize) -> Result<Matrix> {
    let needed = start + depth + columns.saturating_sub(1);
    if columns > 0 && needed > s.len() {
        return Err(Error::InsufficientData { required: needed, available: s.len() });
    }
    let d = s.dim();
    let data = s.as_slice();
    let mut h = Matrix::zeros(depth * d, columns);
    for i in 0..depth * d {
        let row = h.row_mut(i);
        let offset = start * d + i;
        for (j, v) in row.iter_mut().enumerate() {
            *v = data[offset + j * d];
        }
    }
    Ok(h)
}

pub fn build_hankels(traj: &Trajectory, t_ini: usize, horizon: usize, columns: usize) -> Result<HankelSet> {
    if t_ini == 0 || horizon == 0 || columns == 0 {
        return Err(Error::Argument("T_ini, N and M must all be positive".into()));
    }
    let required = required_samples(t_ini, horizon, columns);
    if traj.len() < required {
        return Err(Error::InsufficientData { required, available: traj.len() });
    }
    Ok(HankelSet {
        up: block_hankel(&traj.u, 0, t_ini, columns)?,
        yp: block_hankel(&traj.y, 1, t_ini, columns)?,
        uf: block_hankel(&traj.u, t_ini, horizon, columns)?,
        yf: block_hankel(&traj.y, t_ini + 1, horizon, columns)?,
        t_ini,
        horizon,
        columns,
    })
}

/// `Zp = [Up; Yp]`, `Zf = [Uf; Yf]`.
pub fn stack_past_future(h: &HankelSet) -> (Matrix, Matrix) {
    (Matrix::vstack(&[&h.up, &h.yp]), Matrix::vstack(&[&h.uf, &h.yf]))
}

/// Past window ending at time `k`: `u_ini = col(u(k-T_ini), ..., u(k-1))`
/// and `y_ini = col(y(k-T_ini+1), ..., y(k))`.
pub fn initial_window(u: &Signal, y: &Signal, k: usize, t_ini: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if k < t_ini || k >= y.len() || k > u.len() {
        return Err(Error::InsufficientData { required: t_ini + 1, available: k.min(y.len()) });
    }
    Ok((u.window(k - t_ini, t_ini), y.window(k + 1 - t_ini, t_ini)))
}

fn block_is_hankel(m: &Matrix, dim: usize, tol: f64) -> bool {
    for i in 0..m.rows().saturating_sub(dim) {
        for j in 0..m.cols().saturating_sub(1) {
            if (m[(i + dim, j)] - m[(i, j + 1)]).abs() > tol {
                return false;
            }
        }
    }
    true
}

impl HankelSet {
    pub fn n_u(&self) -> usize {
        self.up.rows() / self.t_ini
    }

    pub fn n_y(&self) -> usize {
        self.yp.rows() / self.t_ini
    }

    /// Anti-diagonal constancy of every block at the sample level.
    pub fn has_hankel_structure(&self, tol: f64) -> bool {
        let (nu, ny) = (self.n_u(), self.n_y());
        block_is_hankel(&self.up, nu, tol)
            && block_is_hankel(&self.yp, ny, tol)
            && block_is_hankel(&self.uf, nu, tol)
            && block_is_hankel(&self.yf, ny, tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn example() -> Trajectory {
        let u = Signal::from_samples(1, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]).unwrap();
        let y = Signal::from_samples(1, vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0]).unwrap();
        Trajectory::new(u, y).unwrap()
    }

    #[test]
    fn scalar_example_blocks() {
        let h = build_hankels(&example(), 2, 2, 2).unwrap();
        let m = |r: [[f64; 2]; 2]| Matrix::from_rows(&r).unwrap();
        assert_eq!(h.up, m([[1.0, 2.0], [2.0, 3.0]]));
        assert_eq!(h.yp, m([[20.0, 30.0], [30.0, 40.0]]));
        assert_eq!(h.uf, m([[3.0, 4.0], [4.0, 5.0]]));
        assert_eq!(h.yf, m([[40.0, 50.0], [50.0, 60.0]]));
        let (zp, zf) = stack_past_future(&h);
        assert_eq!(
            zp,
            Matrix::from_rows(&[[1.0, 2.0], [2.0, 3.0], [20.0, 30.0], [30.0, 40.0]]).unwrap()
        );
        assert_eq!(zf.rows(), 4);
        assert!(h.has_hankel_structure(0.0));
    }

    #[test]
    fn short_trajectory_reports_counts() {
        match build_hankels(&example(), 2, 2, 3) {
            Err(Error::InsufficientData { required, available }) => {
                assert_eq!((required, available), (8, 7));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn initial_window_alignment() {
        let t = example();
        let (ui, yi) = initial_window(&t.u, &t.y, 3, 2).unwrap();
        assert_eq!(ui, vec![2.0, 3.0]);
        assert_eq!(yi, vec![30.0, 40.0]);
    }
}
