//! Discrete-time LTI plant and trajectory simulation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, singular_values, Matrix};
use crate::noise::NoiseModel;
use crate::signal::{Signal, Trajectory};

/// `x(k+1) = A x(k) + B u(k)`, `y(k) = C x(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    ts: f64,
}

impl PlantModel {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, ts: f64) -> Result<Self> {
        let n = a.rows();
        if n == 0 || a.cols() != n {
            return Err(Error::Argument(format!("A must be square and non-empty, got {}x{}", n, a.cols())));
        }
        if b.rows() != n || b.cols() == 0 {
            return Err(Error::dim("B rows", n, b.rows()));
        }
        if c.cols() != n || c.rows() == 0 {
            return Err(Error::dim("C columns", n, c.cols()));
        }
        if !(ts.is_finite() && ts > 0.0) {
            return Err(Error::Argument(format!("sample period must be positive, got {ts}")));
        }
        a.check_finite()?;
        b.check_finite()?;
        c.check_finite()?;
        Ok(PlantModel { a, b, c, ts })
    }

    /// Longitudinal Boeing 747 dynamics discretized with zero-order hold at 0.1 s.
    /// Inputs: throttle, elevator angle. Outputs: longitudinal velocity, climb rate.
    pub fn boeing747() -> Self {
        let a = Matrix::from_rows(&[
            [0.9997, 0.0038, -0.0001, -0.0322],
            [-0.0056, 0.9648, 0.7446, 0.0001],
            [0.0020, -0.0097, 0.9543, -0.0000],
            [0.0001, -0.0005, 0.0978, 1.0000],
        ])
        .expect("constant matrix");
        let b = Matrix::from_rows(&[
            [0.0010, 0.1000],
            [-0.0615, 0.0183],
            [-0.1133, 0.0586],
            [-0.0057, 0.0029],
        ])
        .expect("constant matrix");
        let c = Matrix::from_rows(&[[1.0, 0.0, 0.0, 0.0], [0.0, -1.0, 0.0, 7.74]]).expect("constant matrix");
        PlantModel { a, b, c, ts: 0.1 }
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn n_u(&self) -> usize {
        self.b.cols()
    }

    pub fn n_y(&self) -> usize {
        self.c.rows()
    }

    pub fn step(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut next = self.a.mul_vec(x);
        for (v, w) in next.iter_mut().zip(self.b.mul_vec(u)) {
            *v += w;
        }
        next
    }

    pub fn output(&self, x: &[f64]) -> Vec<f64> {
        self.c.mul_vec(x)
    }

    /// Steady-state gain `C (I − A)⁻¹ B`.
    pub fn dc_gain(&self) -> Result<Matrix> {
        let n = self.n();
        let i_minus_a = &Matrix::identity(n) - &self.a;
        Ok(self.c.matmul(&crate::linalg::solve(&i_minus_a, &self.b)?))
    }

    /// Constant input holding the output at `r_y` (square plants only).
    pub fn steady_state_input(&self, r_y: &[f64]) -> Result<Vec<f64>> {
        if self.n_u() != self.n_y() {
            return Err(Error::Argument("steady-state input needs as many inputs as outputs".into()));
        }
        if r_y.len() != self.n_y() {
            return Err(Error::dim("output reference length", self.n_y(), r_y.len()));
        }
        let g = self.dc_gain()?;
        Ok(crate::linalg::solve(&g, &Matrix::column(r_y))?.into_vec())
    }

    /// `[B, AB, ..., A^{n-1}B]`.
    pub fn controllability_matrix(&self) -> Matrix {
        let n = self.n();
        let mut blocks = Vec::with_capacity(n);
        let mut cur = self.b.clone();
        for _ in 0..n {
            let next = self.a.matmul(&cur);
            blocks.push(cur);
            cur = next;
        }
        let refs: Vec<&Matrix> = blocks.iter().collect();
        Matrix::hstack(&refs)
    }

    /// `[C; CA; ...; CA^{n-1}]`.
    pub fn observability_matrix(&self) -> Matrix {
        let n = self.n();
        let mut blocks = Vec::with_capacity(n);
        let mut cur = self.c.clone();
        for _ in 0..n {
            let next = cur.matmul(&self.a);
            blocks.push(cur);
            cur = next;
        }
        let refs: Vec<&Matrix> = blocks.iter().collect();
        Matrix::vstack(&refs)
    }

    pub fn controllability_rank(&self) -> Result<usize> {
        Ok(numerical_rank(&singular_values(&self.controllability_matrix())?, 1e-10))
    }

    pub fn observability_rank(&self) -> Result<usize> {
        Ok(numerical_rank(&singular_values(&self.observability_matrix())?, 1e-10))
    }

    pub fn is_controllable(&self) -> Result<bool> {
        Ok(self.controllability_rank()? == self.n())
    }

    pub fn is_observable(&self) -> Result<bool> {
        Ok(self.observability_rank()? == self.n())
    }
}

/// Runs the plant from `x0` over `inputs`. Noise sample `k` is drawn at
/// counter index `k`.
pub fn simulate_lti(
    plant: &PlantModel,
    x0: &[f64],
    inputs: &Signal,
    noise: Option<&NoiseModel>,
) -> Result<Trajectory> {
    if x0.len() != plant.n() {
        return Err(Error::dim("initial state length", plant.n(), x0.len()));
    }
    if inputs.dim() != plant.n_u() {
        return Err(Error::dim("input dimension", plant.n_u(), inputs.dim()));
    }
    if let Some(nm) = noise {
        if nm.dim() != plant.n_y() {
            return Err(Error::dim("noise dimension", plant.n_y(), nm.dim()));
        }
    }
    let len = inputs.len();
    let mut y = Signal::new(plant.n_y());
    let mut y_clean = Signal::new(plant.n_y());
    let mut x = x0.to_vec();
    for k in 0..len {
        let yc = plant.output(&x);
        let measured = match noise {
            Some(nm) => yc.iter().zip(nm.sample(k as u64)).map(|(a, b)| a + b).collect(),
            None => yc.clone(),
        };
        y.push(&measured);
        y_clean.push(&yc);
        x = plant.step(&x, inputs.sample(k));
    }
    if let Some(i) = y.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: i / plant.n_y(), col: i % plant.n_y() });
    }
    Trajectory::with_clean(inputs.clone(), y, y_clean)
}

/// State after running `inputs` from `x0` without recording outputs.
pub fn final_state(plant: &PlantModel, x0: &[f64], inputs: &Signal) -> Vec<f64> {
    let mut x = if x0.is_empty() { vec![0.0; plant.n()] } else { x0.to_vec() };
    for k in 0..inputs.len() {
        x = plant.step(&x, inputs.sample(k));
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar() -> PlantModel {
        let m = |v: f64| Matrix::from_rows(&[[v]]).unwrap();
        PlantModel::new(m(0.5), m(1.0), m(1.0), 1.0).unwrap()
    }

    #[test]
    fn scalar_recursion() {
        let u = Signal::from_samples(1, vec![1.0, 0.0, 0.0]).unwrap();
        let t = simulate_lti(&scalar(), &[0.0], &u, None).unwrap();
        assert_eq!(t.y_clean.unwrap().as_slice(), &[0.0, 1.0, 0.5]);
    }

    #[test]
    fn zero_input_stays_at_rest() {
        let p = PlantModel::boeing747();
        let t = simulate_lti(&p, &[0.0; 4], &Signal::zeros(2, 50), None).unwrap();
        assert!(t.y.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn boeing_preset_is_minimal() {
        let p = PlantModel::boeing747();
        assert_eq!((p.n(), p.n_u(), p.n_y()), (4, 2, 2));
        assert!(p.is_controllable().unwrap());
        assert!(p.is_observable().unwrap());
    }

    #[test]
    fn steady_state_input_reaches_reference() {
        let p = PlantModel::boeing747();
        let u = p.steady_state_input(&[10.0, 0.0]).unwrap();
        let y = p.dc_gain().unwrap().mul_vec(&u);
        assert!((y[0] - 10.0).abs() < 1e-9 && y[1].abs() < 1e-9);
    }

    #[test]
    fn dimension_errors() {
        let p = PlantModel::boeing747();
        assert!(simulate_lti(&p, &[0.0; 3], &Signal::zeros(2, 5), None).is_err());
        assert!(simulate_lti(&p, &[0.0; 4], &Signal::zeros(1, 5), None).is_err());
        assert!(PlantModel::new(Matrix::zeros(2, 3), Matrix::zeros(2, 1), Matrix::zeros(1, 2), 0.1).is_err());
    }
}
