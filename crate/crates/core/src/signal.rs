//! Sampled multi-channel signals, input/output trajectories and scaling.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, singular_values, Matrix};
use crate::noise::{CounterRng, STREAM_PE_INPUT};

/// Samples of a `dim`-channel signal stored sample-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    dim: usize,
    data: Vec<f64>,
}

impl Signal {
    pub fn new(dim: usize) -> Self {
        Signal { dim, data: Vec::new() }
    }

    pub fn zeros(dim: usize, len: usize) -> Self {
        Signal { dim, data: vec![0.0; dim * len] }
    }

    /// Builds a signal from concatenated samples `s(0), s(1), ...`.
    pub fn from_samples(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Argument("signal dimension must be positive".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::Argument(format!(
                "sample buffer of length {} is not a multiple of dimension {}",
                data.len(),
                dim
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i / dim, col: i % dim });
        }
        Ok(Signal { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn sample(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn sample_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn push(&mut self, s: &[f64]) {
        assert_eq!(s.len(), self.dim, "sample has wrong dimension");
        self.data.extend_from_slice(s);
    }

    pub fn channel(&self, i: usize) -> Vec<f64> {
        self.data.iter().skip(i).step_by(self.dim).copied().collect()
    }

    /// Stacked samples `col(s(start), ..., s(start + len - 1))`.
    pub fn window(&self, start: usize, len: usize) -> Vec<f64> {
        self.data[start * self.dim..(start + len) * self.dim].to_vec()
    }

    pub fn truncated(&self, len: usize) -> Signal {
        Signal { dim: self.dim, data: self.data[..len * self.dim].to_vec() }
    }
}

/// Paired input and measured output, optionally with the noise-free output.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub u: Signal,
    pub y: Signal,
    pub y_clean: Option<Signal>,
}

impl Trajectory {
    pub fn new(u: Signal, y: Signal) -> Result<Self> {
        if u.len() != y.len() {
            return Err(Error::dim("trajectory length", u.len(), y.len()));
        }
        Ok(Trajectory { u, y, y_clean: None })
    }

    pub fn with_clean(u: Signal, y: Signal, y_clean: Signal) -> Result<Self> {
        let mut t = Trajectory::new(u, y)?;
        if y_clean.len() != t.y.len() || y_clean.dim() != t.y.dim() {
            return Err(Error::dim("clean output length", t.y.len(), y_clean.len()));
        }
        t.y_clean = Some(y_clean);
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn n_u(&self) -> usize {
        self.u.dim()
    }

    pub fn n_y(&self) -> usize {
        self.y.dim()
    }
}

/// Diagonal per-channel scale factors for inputs and outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingPair {
    pub mu: Vec<f64>,
    pub my: Vec<f64>,
}

impl ScalingPair {
    pub fn identity(n_u: usize, n_y: usize) -> Self {
        ScalingPair { mu: vec![1.0; n_u], my: vec![1.0; n_y] }
    }

    pub fn mu_matrix(&self) -> Matrix {
        Matrix::from_diag(&self.mu)
    }

    pub fn my_matrix(&self) -> Matrix {
        Matrix::from_diag(&self.my)
    }

    /// Physical input to scaled coordinates.
    pub fn scale_u(&self, u: &[f64]) -> Vec<f64> {
        u.iter().enumerate().map(|(i, v)| v / self.mu[i % self.mu.len()]).collect()
    }

    /// Physical output to scaled coordinates.
    pub fn scale_y(&self, y: &[f64]) -> Vec<f64> {
        y.iter().enumerate().map(|(i, v)| v / self.my[i % self.my.len()]).collect()
    }

    /// Scaled input back to physical units.
    pub fn unscale_u(&self, u: &[f64]) -> Vec<f64> {
        u.iter().enumerate().map(|(i, v)| v * self.mu[i % self.mu.len()]).collect()
    }

    /// Scaled output back to physical units.
    pub fn unscale_y(&self, y: &[f64]) -> Vec<f64> {
        y.iter().enumerate().map(|(i, v)| v * self.my[i % self.my.len()]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleDirection {
    /// Divide by the scale factors.
    Forward,
    /// Multiply by the scale factors.
    Inverse,
}

fn mean_abs(signal: &Signal, name: &'static str) -> Result<Vec<f64>> {
    if signal.is_empty() {
        return Err(Error::InsufficientData { required: 1, available: 0 });
    }
    let n = signal.len() as f64;
    (0..signal.dim())
        .map(|i| {
            let m = signal.channel(i).iter().map(|v| v.abs()).sum::<f64>() / n;
            if m > 0.0 && m.is_finite() {
                Ok(m)
            } else {
                Err(Error::ScaleUndefined { signal: name, channel: i })
            }
        })
        .collect()
}

/// Per-channel mean absolute value of the recorded input and output.
pub fn compute_scaling(traj: &Trajectory) -> Result<ScalingPair> {
    Ok(ScalingPair { mu: mean_abs(&traj.u, "input")?, my: mean_abs(&traj.y, "output")? })
}

fn scale_signal(s: &Signal, factors: &[f64], dir: ScaleDirection) -> Result<Signal> {
    if factors.len() != s.dim() {
        return Err(Error::dim("scale factor count", s.dim(), factors.len()));
    }
    let d = s.dim();
    let data = s
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, v)| match dir {
            ScaleDirection::Forward => v / factors[i % d],
            ScaleDirection::Inverse => v * factors[i % d],
        })
        .collect();
    Ok(Signal { dim: d, data })
}

pub fn apply_scaling(traj: &Trajectory, s: &ScalingPair, dir: ScaleDirection) -> Result<Trajectory> {
    let u = scale_signal(&traj.u, &s.mu, dir)?;
    let y = scale_signal(&traj.y, &s.my, dir)?;
    let y_clean = match &traj.y_clean {
        Some(c) => Some(scale_signal(c, &s.my, dir)?),
        None => None,
    };
    Ok(Trajectory { u, y, y_clean })
}

/// Uniform i.i.d. input on `[-amplitude, amplitude]` per channel.
pub fn generate_pe_input(n_u: usize, length: usize, amplitude: f64, seed: u64) -> Result<Signal> {
    if n_u == 0 {
        return Err(Error::Argument("input dimension must be positive".into()));
    }
    if !(amplitude.is_finite() && amplitude > 0.0) {
        return Err(Error::Argument(format!("input amplitude must be positive, got {amplitude}")));
    }
    let rng = CounterRng::new(seed, STREAM_PE_INPUT);
    let mut out = Signal::zeros(n_u, length);
    let mut buf = vec![0.0; n_u];
    for k in 0..length {
        rng.uniforms(k as u64, &mut buf);
        for (o, v) in out.sample_mut(k).iter_mut().zip(&buf) {
            *o = amplitude * (2.0 * v - 1.0);
        }
    }
    Ok(out)
}

/// Numerical rank of the depth-`depth` block Hankel matrix of `input`;
/// the input is persistently exciting of order `depth` when this equals
/// `depth * dim`.
pub fn excitation_rank(input: &Signal, depth: usize) -> Result<usize> {
    if depth == 0 || input.len() < depth {
        return Err(Error::InsufficientData { required: depth.max(1), available: input.len() });
    }
    let h = crate::hankel::block_hankel(input, 0, depth, input.len() - depth + 1)?;
    let sv = singular_values(&h)?;
    Ok(numerical_rank(&sv, 1e-10))
}
