use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::plant::PlantModel;
use crate::predict::PredictorKind;

/// Per-sample stage weights in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub q: Matrix,
    pub r: Matrix,
    pub lambda: Matrix,
}

impl Weights {
    /// `Q = q·I`, `R = r·I`, `Λ = λ·I`.
    pub fn diagonal(n_u: usize, n_y: usize, q: f64, r: f64, lambda: f64) -> Self {
        Weights {
            q: Matrix::identity(n_y).scale(q),
            r: Matrix::identity(n_u).scale(r),
            lambda: Matrix::identity(n_y).scale(lambda),
        }
    }
}

/// Everything one closed-loop experiment needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub plant: PlantModel,
    pub controller: PredictorKind,
    /// Plant order used for the rank split.
    pub order: usize,
    pub t_ini: usize,
    pub horizon: usize,
    /// Hankel column count.
    pub columns: usize,
    /// Per-sample output noise covariance (physical units).
    pub noise_cov: Matrix,
    pub pe_amplitude: f64,
    pub r_y: Vec<f64>,
    /// Input reference; estimated from the predictor's steady state when absent.
    pub r_u: Option<Vec<f64>>,
    pub u_lo: Vec<f64>,
    pub u_hi: Vec<f64>,
    pub y_lo: Vec<f64>,
    pub y_hi: Vec<f64>,
    pub weights: Weights,
    pub steps: usize,
    pub seed: u64,
}

impl Scenario {
    /// Boeing 747 velocity step from 0 to 10 ft/s at constant altitude,
    /// noise-free, NTDPC.
    pub fn boeing747() -> Self {
        let plant = PlantModel::boeing747();
        let r_y = vec![10.0, 0.0];
        let r_u = plant.steady_state_input(&r_y).ok();
        Scenario {
            plant,
            controller: PredictorKind::Ntdpc,
            order: 4,
            t_ini: 20,
            horizon: 20,
            columns: 2500,
            noise_cov: Matrix::zeros(2, 2),
            pe_amplitude: 20.0,
            r_y,
            r_u,
            u_lo: vec![-20.0, -20.0],
            u_hi: vec![20.0, 20.0],
            y_lo: vec![-25.0, -15.0],
            y_hi: vec![25.0, 15.0],
            weights: Weights::diagonal(2, 2, 1.0, 0.01, 1e3),
            steps: 800,
            seed: 1,
        }
    }

    pub fn with_noise_variance(mut self, sigma2: f64) -> Self {
        self.noise_cov = Matrix::identity(self.plant.n_y()).scale(sigma2);
        self
    }

    pub fn with_controller(mut self, kind: PredictorKind) -> Self {
        self.controller = kind;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (n_u, n_y) = (self.plant.n_u(), self.plant.n_y());
        if self.t_ini == 0 || self.horizon == 0 || self.columns == 0 {
            return Err(Error::Argument("T_ini, N and M must be positive".into()));
        }
        if self.horizon < self.t_ini {
            return Err(Error::Argument(format!(
                "prediction horizon N = {} must be at least T_ini = {}",
                self.horizon, self.t_ini
            )));
        }
        let pe_bound = n_u * (self.t_ini + self.horizon + self.order);
        if self.columns < pe_bound {
            return Err(Error::Argument(format!(
                "data length M = {} is below the excitation bound n_u(T_ini + N + n) = {pe_bound}",
                self.columns
            )));
        }
        if self.order == 0 {
            return Err(Error::Argument("plant order must be positive".into()));
        }
        let checks: [(&str, usize, usize); 6] = [
            ("r_y", n_y, self.r_y.len()),
            ("u_lo", n_u, self.u_lo.len()),
            ("u_hi", n_u, self.u_hi.len()),
            ("y_lo", n_y, self.y_lo.len()),
            ("y_hi", n_y, self.y_hi.len()),
            ("noise covariance", n_y, self.noise_cov.rows()),
        ];
        for (name, want, got) in checks {
            if want != got {
                return Err(Error::dim(name, want, got));
            }
        }
        if let Some(r_u) = &self.r_u {
            if r_u.len() != n_u {
                return Err(Error::dim("r_u", n_u, r_u.len()));
            }
        }
        if self.weights.q.shape() != (n_y, n_y)
            || self.weights.lambda.shape() != (n_y, n_y)
            || self.weights.r.shape() != (n_u, n_u)
        {
            return Err(Error::Argument("weight matrix sizes do not match the plant".into()));
        }
        for i in 0..n_u {
            if self.u_lo[i].is_nan() || self.u_hi[i].is_nan() || self.u_lo[i] > self.u_hi[i] {
                return Err(Error::Argument(format!("input box {i} is empty")));
            }
        }
        for i in 0..n_y {
            if self.y_lo[i].is_nan() || self.y_hi[i].is_nan() || self.y_lo[i] > self.y_hi[i] {
                return Err(Error::Argument(format!("output box {i} is empty")));
            }
            if self.r_y[i] < self.y_lo[i] || self.r_y[i] > self.y_hi[i] {
                return Err(Error::Argument(format!("output reference {i} lies outside the output box")));
            }
        }
        if let Some(r_u) = &self.r_u {
            for i in 0..n_u {
                if r_u[i] < self.u_lo[i] || r_u[i] > self.u_hi[i] {
                    return Err(Error::Argument(format!("input reference {i} lies outside the input box")));
                }
            }
        }
        if self.pe_amplitude.is_nan() || self.pe_amplitude <= 0.0 {
            return Err(Error::Argument("excitation amplitude must be positive".into()));
        }
        Ok(())
    }
}
