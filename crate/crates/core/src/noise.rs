//! Reproducible random streams and the measurement-noise model.
//!
//! Every draw is addressed by `(seed, stream, k)`: the ChaCha8 keystream for
//! `(seed, stream)` is positioned at a word offset derived from the sample
//! index `k`, so any sample can be regenerated independently of the others
//! and distinct streams never overlap.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::linalg::{svd_full, Matrix};

/// Stream used for persistently exciting input generation.
pub const STREAM_PE_INPUT: u64 = 1;
/// Stream used for measurement noise during offline data collection.
pub const STREAM_DATA_NOISE: u64 = 2;
/// Stream used for measurement noise during closed-loop operation.
pub const STREAM_LOOP_NOISE: u64 = 3;

/// SplitMix64 finalizer; derives independent child seeds from a master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    seed: u64,
    stream: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        CounterRng { seed, stream }
    }

    fn positioned(&self, k: u64, words_per_sample: u128) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(k as u128 * words_per_sample);
        rng
    }

    /// Uniform draws in `[0, 1)` for sample `k`.
    pub fn uniforms(&self, k: u64, out: &mut [f64]) {
        let mut rng = self.positioned(k, 2 * out.len() as u128);
        for o in out.iter_mut() {
            *o = unit_f64(rng.next_u64());
        }
    }

    /// Standard normal draws for sample `k` (Box–Muller).
    pub fn normals(&self, k: u64, out: &mut [f64]) {
        let pairs = out.len().div_ceil(2);
        let mut rng = self.positioned(k, 4 * pairs as u128);
        for chunk in out.chunks_mut(2) {
            let u1 = 1.0 - unit_f64(rng.next_u64());
            let u2 = unit_f64(rng.next_u64());
            let radius = libm::sqrt(-2.0 * libm::log(u1));
            let angle = 2.0 * core::f64::consts::PI * u2;
            chunk[0] = radius * libm::cos(angle);
            if chunk.len() > 1 {
                chunk[1] = radius * libm::sin(angle);
            }
        }
    }
}

#[inline]
fn unit_f64(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Zero-mean Gaussian output noise with a fixed covariance.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    covariance: Matrix,
    factor: Matrix,
    rng: CounterRng,
    silent: bool,
}

impl NoiseModel {
    pub fn new(covariance: Matrix, seed: u64, stream: u64) -> Result<Self> {
        let n = covariance.rows();
        if covariance.cols() != n || n == 0 {
            return Err(Error::Argument(format!(
                "noise covariance must be square and non-empty, got {}x{}",
                n,
                covariance.cols()
            )));
        }
        covariance.check_finite()?;
        if !covariance.is_symmetric(1e-12) {
            return Err(Error::Argument("noise covariance must be symmetric".into()));
        }
        let silent = covariance.max_abs() == 0.0;
        let factor = if silent {
            Matrix::zeros(n, n)
        } else {
            // symmetric PSD square root factor F with F Fᵀ = Σ
            let f = svd_full(&covariance)?;
            let smax = f.sigma[0];
            for j in 0..n {
                let wv = crate::linalg::dot(&f.w.col_vec(j), &f.v.col_vec(j));
                if f.sigma[j] > 1e-12 * smax && wv < 0.0 {
                    return Err(Error::Argument("noise covariance has a negative eigenvalue".into()));
                }
            }
            let roots: Vec<f64> = f.sigma.iter().map(|s| libm::sqrt(*s)).collect();
            f.w.scale_cols(&roots)
        };
        Ok(NoiseModel {
            covariance,
            factor,
            rng: CounterRng::new(seed, stream),
            silent,
        })
    }

    /// `σ² · I` of the given dimension.
    pub fn isotropic(dim: usize, variance: f64, seed: u64, stream: u64) -> Result<Self> {
        if !(variance.is_finite() && variance >= 0.0) {
            return Err(Error::Argument(format!("noise variance must be >= 0, got {variance}")));
        }
        NoiseModel::new(Matrix::identity(dim).scale(variance), seed, stream)
    }

    pub fn with_stream(&self, stream: u64) -> Self {
        let mut out = self.clone();
        out.rng = CounterRng::new(self.rng.seed, stream);
        out
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut out = self.clone();
        out.rng = CounterRng::new(seed, self.rng.stream);
        out
    }

    pub fn dim(&self) -> usize {
        self.covariance.rows()
    }

    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }

    pub fn seed(&self) -> u64 {
        self.rng.seed
    }

    pub fn is_silent(&self) -> bool {
        self.silent
    }

    /// Noise vector added to the output at sample `k`.
    pub fn sample(&self, k: u64) -> Vec<f64> {
        let n = self.dim();
        if self.silent {
            return vec![0.0; n];
        }
        let mut z = vec![0.0; n];
        self.rng.normals(k, &mut z);
        self.factor.mul_vec(&z)
    }
}
