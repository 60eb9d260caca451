use alloc::vec::Vec;

use super::matrix::{dot, norm2, Matrix};

/// `A = L · Qo` with `L` lower-trapezoidal (m×p) and `Qo` having
/// orthonormal rows (p×n), p = min(m, n). Diagonal of `L` is non-negative.
#[derive(Debug, Clone)]
pub struct LqFactors {
    pub l: Matrix,
    pub qo: Matrix,
}

/// Householder reflectors acting on trailing columns, as produced by the
/// row-wise reduction of a matrix to lower-trapezoidal form.
#[derive(Debug, Clone)]
pub(crate) struct RowReflectors {
    n: usize,
    // reflector k acts on columns k..n; beta = 0 marks the identity
    vs: Vec<Vec<f64>>,
    betas: Vec<f64>,
}

/// Reduces `a` in place to `[L | 0]` and returns the reflectors.
pub(crate) fn reduce_rows(a: &mut Matrix) -> RowReflectors {
    let (m, n) = a.shape();
    let p = m.min(n);
    let mut vs = Vec::with_capacity(p);
    let mut betas = Vec::with_capacity(p);
    for k in 0..p {
        let x = &a.row(k)[k..];
        let tail = norm2(&x[1..]);
        if tail == 0.0 {
            vs.push(Vec::new());
            betas.push(0.0);
            continue;
        }
        let normx = norm2(x);
        let alpha = if x[0] >= 0.0 { -normx } else { normx };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let beta = 2.0 / dot(&v, &v);
        for i in k..m {
            let row = &mut a.row_mut(i)[k..];
            let w = beta * dot(row, &v);
            if w != 0.0 {
                for (r, vi) in row.iter_mut().zip(&v) {
                    *r -= w * vi;
                }
            }
        }
        // exact zeros to the right of the diagonal
        let row = a.row_mut(k);
        row[k] = alpha;
        row[k + 1..].iter_mut().for_each(|x| *x = 0.0);
        vs.push(v);
        betas.push(beta);
    }
    RowReflectors { n, vs, betas }
}

impl RowReflectors {
    /// Rows `start..start+count` of the orthogonal matrix `H_{p-1} ⋯ H_0`.
    pub(crate) fn orthogonal_rows(&self, start: usize, count: usize) -> Matrix {
        let n = self.n;
        let mut e = Matrix::zeros(count, n);
        for i in 0..count {
            e[(i, start + i)] = 1.0;
        }
        for k in (0..self.vs.len()).rev() {
            let beta = self.betas[k];
            if beta == 0.0 {
                continue;
            }
            let v = &self.vs[k];
            for i in 0..count {
                // rows that are still unit vectors e_j with j < k are untouched
                if start + i < k {
                    continue;
                }
                let row = &mut e.row_mut(i)[k..];
                let w = beta * dot(row, v);
                if w != 0.0 {
                    for (r, vi) in row.iter_mut().zip(v) {
                        *r -= w * vi;
                    }
                }
            }
        }
        e
    }
}

fn split_l(work: &Matrix) -> Matrix {
    let (m, n) = work.shape();
    work.block(0..m, 0..m.min(n))
}

/// LQ factorization by Householder reflections.
pub fn lq_factor(a: &Matrix) -> LqFactors {
    let mut work = a.clone();
    let refl = reduce_rows(&mut work);
    let mut l = split_l(&work);
    let p = l.cols();
    let mut qo = refl.orthogonal_rows(0, p);
    for k in 0..p {
        if l[(k, k)] < 0.0 {
            for i in 0..l.rows() {
                l[(i, k)] = -l[(i, k)];
            }
            qo.row_mut(k).iter_mut().for_each(|x| *x = -*x);
        }
    }
    LqFactors { l, qo }
}

/// Only the lower-trapezoidal factor; avoids forming `Qo`.
pub fn lq_lower(a: &Matrix) -> Matrix {
    let mut work = a.clone();
    reduce_rows(&mut work);
    let mut l = split_l(&work);
    for k in 0..l.cols() {
        if l[(k, k)] < 0.0 {
            for i in 0..l.rows() {
                l[(i, k)] = -l[(i, k)];
            }
        }
    }
    l
}

/// Orthonormal rows spanning the null space of a full-row-rank `a` (m < n),
/// i.e. the trailing `n - m` rows of the LQ orthogonal factor.
pub fn null_space_rows(a: &Matrix) -> Matrix {
    let (m, n) = a.shape();
    if m >= n {
        return Matrix::zeros(0, n);
    }
    let mut work = a.clone();
    let refl = reduce_rows(&mut work);
    refl.orthogonal_rows(m, n - m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row_gives_its_norm() {
        let a = Matrix::from_rows(&[[3.0, 0.0, -4.0]]).unwrap();
        let f = lq_factor(&a);
        assert!((f.l[(0, 0)] - 5.0).abs() < 1e-15);
        let expect = [0.6, 0.0, -0.8];
        for (q, e) in f.qo.row(0).iter().zip(expect) {
            assert!((q - e).abs() < 1e-15);
        }
    }

    #[test]
    fn lower_triangular_input_is_a_fixed_point() {
        let l0 = Matrix::from_rows(&[[2.0, 0.0, 0.0], [1.0, 3.0, 0.0], [-1.0, 0.5, 1.5]]).unwrap();
        let f = lq_factor(&l0);
        assert_eq!(f.l, l0);
        assert_eq!(f.qo, Matrix::identity(3));
    }

    #[test]
    fn null_space_is_orthogonal_to_rows() {
        let a = Matrix::from_fn(3, 7, |i, j| libm::sin((i * 7 + j) as f64));
        let z = null_space_rows(&a);
        assert_eq!(z.shape(), (4, 7));
        assert!(a.matmul_t(&z).max_abs() < 1e-13);
        let gram = z.matmul_t(&z);
        assert!((&gram - &Matrix::identity(4)).max_abs() < 1e-13);
    }
}
