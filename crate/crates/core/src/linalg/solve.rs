use alloc::format;
use alloc::vec::Vec;

use super::matrix::{dot, Matrix};
use super::svd::singular_values;
use crate::error::{Error, Result};

/// Lower Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    pub fn new(a: &Matrix) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::dim("cholesky (square)", n, a.cols()));
        }
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let d = a[(j, j)] - dot(&l.row(j)[..j], &l.row(j)[..j]);
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::Singular(format!(
                    "matrix not positive definite (pivot {j} = {d:e})"
                )));
            }
            let djj = libm::sqrt(d);
            l[(j, j)] = djj;
            for i in j + 1..n {
                let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
                l[(i, j)] = s / djj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn factor(&self) -> &Matrix {
        &self.l
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let y = forward_substitute(&self.l, b);
        // Lᵀ x = y
        let n = self.l.rows();
        let mut x = y;
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    /// Solves `L y = b` only (whitening with the Cholesky factor).
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        forward_substitute(&self.l, b)
    }

    /// `L⁻¹ B` column by column.
    pub fn solve_lower_mat(&self, b: &Matrix) -> Matrix {
        let bt = b.transpose();
        let mut out = Matrix::zeros(b.cols(), b.rows());
        for j in 0..b.cols() {
            out.row_mut(j)
                .copy_from_slice(&forward_substitute(&self.l, bt.row(j)));
        }
        out.transpose()
    }
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn forward_substitute(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut x = b.to_vec();
    for i in 0..n {
        let s = x[i] - dot(&l.row(i)[..i], &x[..i]);
        x[i] = s / l[(i, i)];
    }
    x
}

/// LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn new(a: &Matrix) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::dim("LU (square)", n, a.cols()));
        }
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if pmax <= scale * 1e-14 {
                return Err(Error::Singular(format!("zero pivot at column {k}")));
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[(i, j)] -= f * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s = dot(&self.lu.row(i)[..i], &x[..i]);
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s = dot(&self.lu.row(i)[i + 1..], &x[i + 1..]);
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        x
    }

    pub fn solve_mat(&self, b: &Matrix) -> Matrix {
        let bt = b.transpose();
        let mut xt = Matrix::zeros(b.cols(), b.rows());
        for j in 0..b.cols() {
            xt.row_mut(j).copy_from_slice(&self.solve(bt.row(j)));
        }
        xt.transpose()
    }

    pub fn inverse(&self) -> Matrix {
        self.solve_mat(&Matrix::identity(self.lu.rows()))
    }
}

/// Dense solve `A X = B`.
pub fn solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    Ok(Lu::new(a)?.solve_mat(b))
}

pub fn inverse(a: &Matrix) -> Result<Matrix> {
    Ok(Lu::new(a)?.inverse())
}

/// 2-norm condition number from singular values; infinite when singular.
pub fn condition_number(a: &Matrix) -> Result<f64> {
    let s = singular_values(a)?;
    let smin = s.last().copied().unwrap_or(0.0);
    if smin == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(s[0] / smin)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = Matrix::from_rows(&[[4.0, 2.0, 0.4], [2.0, 5.0, 1.0], [0.4, 1.0, 3.0]]).unwrap();
        let c = Cholesky::new(&a).unwrap();
        let x = c.solve(&[1.0, 2.0, 3.0]);
        let r = a.mul_vec(&x);
        for (ri, bi) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((ri - bi).abs() < 1e-14);
        }
        assert!(Cholesky::new(&Matrix::from_diag(&[1.0, -1.0])).is_err());
    }

    #[test]
    fn lu_inverse_and_singularity() {
        let a = Matrix::from_rows(&[[0.0, 2.0], [3.0, 1.0]]).unwrap();
        let inv = inverse(&a).unwrap();
        assert!((&a.matmul(&inv) - &Matrix::identity(2)).max_abs() < 1e-15);
        let s = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        assert!(matches!(Lu::new(&s), Err(Error::Singular(_))));
        assert!(condition_number(&s).unwrap() > 1e15);
    }
}
