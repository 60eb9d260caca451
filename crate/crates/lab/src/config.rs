//! Experiment configuration: a TOML file with a fixed schema. Every key is
//! optional; missing keys take the Boeing 747 defaults and unknown keys are
//! rejected.

use std::path::Path;

use ntdpc_core::control::{Scenario, Weights};
use ntdpc_core::plant::PlantModel;
use ntdpc_core::predict::PredictorKind;
use ntdpc_core::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const RESOLVED_CONFIG_FILE: &str = "resolved_config.toml";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub plant: PlantConfig,
    pub data: DataConfig,
    pub noise: NoiseConfig,
    pub control: ControlConfig,
    pub monte_carlo: MonteCarloConfig,
    pub sensitivity: SensitivityConfig,
    pub timing: TimingConfig,
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantConfig {
    /// Named plant; `boeing747` is the only preset. Ignored when `a`, `b`, `c` are given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ts: Option<f64>,
    /// Order used for the rank split; defaults to the state dimension.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
}

impl Default for PlantConfig {
    fn default() -> Self {
        PlantConfig { preset: Some("boeing747".into()), a: None, b: None, c: None, ts: None, order: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub t_ini: usize,
    pub horizon: usize,
    /// Hankel column count M.
    pub columns: usize,
    pub pe_amplitude: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { t_ini: 20, horizon: 20, columns: 2500, pe_amplitude: 20.0 }
    }
}

/// Per-sample output noise: an isotropic variance or a full covariance.
/// Both absent means noise-free.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covariance: Option<Vec<Vec<f64>>>,
}

/// A weight given as a scalar multiple of the identity or as a full matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

/// Input reference: explicit values, `"plant"` (steady state of the
/// simulated plant) or `"estimate"` (steady state of the identified predictor).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InputReference {
    Values(Vec<f64>),
    Method(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlConfig {
    pub controllers: Vec<String>,
    pub steps: usize,
    pub r_y: Vec<f64>,
    pub r_u: InputReference,
    pub u_lo: Vec<f64>,
    pub u_hi: Vec<f64>,
    pub y_lo: Vec<f64>,
    pub y_hi: Vec<f64>,
    pub q: WeightSpec,
    pub r: WeightSpec,
    pub lambda: WeightSpec,
}

impl Default for ControlConfig {
    fn default() -> Self {
        ControlConfig {
            controllers: PredictorKind::ALL.iter().map(|k| k.name().to_string()).collect(),
            steps: 800,
            r_y: vec![10.0, 0.0],
            r_u: InputReference::Method("plant".into()),
            u_lo: vec![-20.0, -20.0],
            u_hi: vec![20.0, 20.0],
            y_lo: vec![-25.0, -15.0],
            y_hi: vec![25.0, 15.0],
            q: WeightSpec::Scalar(1.0),
            r: WeightSpec::Scalar(0.01),
            lambda: WeightSpec::Scalar(1e3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloConfig {
    pub runs: usize,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig { runs: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensitivityConfig {
    pub t_ini: Vec<usize>,
    pub variances: Vec<f64>,
    pub seeds: usize,
    /// Guide line drawn on the plot.
    pub threshold: f64,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        SensitivityConfig {
            t_ini: (10..=50).step_by(5).collect(),
            variances: vec![0.01, 0.04, 0.16, 0.32],
            seeds: 50,
            threshold: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingConfig {
    pub t_h: Vec<usize>,
    pub columns: Vec<usize>,
    pub repeats: usize,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig { t_h: vec![10, 20], columns: vec![1000, 2000, 4000], repeats: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { seed: 1, output_dir: "out".into() }
    }
}

fn config_err(key: &str, msg: impl std::fmt::Display) -> LabError {
    LabError::Config(format!("`{key}`: {msg}"))
}

fn matrix(key: &str, rows: &[Vec<f64>]) -> Result<Matrix> {
    Matrix::from_rows(rows).map_err(|e| config_err(key, e))
}

fn expect_len(key: &str, v: &[f64], want: usize, what: &str) -> Result<()> {
    if v.len() != want {
        return Err(config_err(key, format!("expected {want} entries ({what}), got {}", v.len())));
    }
    Ok(())
}

fn weight(key: &str, w: &WeightSpec, dim: usize) -> Result<Matrix> {
    match w {
        WeightSpec::Scalar(s) => Ok(Matrix::identity(dim).scale(*s)),
        WeightSpec::Matrix(rows) => {
            let m = matrix(key, rows)?;
            if m.shape() != (dim, dim) {
                return Err(config_err(key, format!("expected a {dim}x{dim} matrix, got {}x{}", m.rows(), m.cols())));
            }
            Ok(m)
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| LabError::Config(e.to_string()))?;
        let cfg: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner().to_string();
            if path.is_empty() || path == "." {
                LabError::Config(inner)
            } else {
                LabError::Config(format!("key `{path}`: {inner}"))
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Fully defaulted configuration as TOML; loading it reproduces this config.
    pub fn resolved_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn plant(&self) -> Result<PlantModel> {
        let p = &self.plant;
        match (&p.a, &p.b, &p.c) {
            (Some(a), Some(b), Some(c)) => {
                let ts = p.ts.unwrap_or(1.0);
                PlantModel::new(matrix("plant.a", a)?, matrix("plant.b", b)?, matrix("plant.c", c)?, ts)
                    .map_err(|e| config_err("plant", e))
            }
            (None, None, None) => match p.preset.as_deref() {
                Some("boeing747") => Ok(PlantModel::boeing747()),
                Some(other) => Err(config_err("plant.preset", format!("unknown preset \"{other}\" (expected \"boeing747\")"))),
                None => Err(config_err("plant", "give either `preset` or all of `a`, `b`, `c`")),
            },
            _ => Err(config_err("plant", "matrices `a`, `b` and `c` must be given together")),
        }
    }

    pub fn controllers(&self) -> Result<Vec<PredictorKind>> {
        self.control
            .controllers
            .iter()
            .map(|name| {
                PredictorKind::parse(name).ok_or_else(|| {
                    config_err("control.controllers", format!("unknown controller \"{name}\" (expected ntdpc, spc or smmpc)"))
                })
            })
            .collect()
    }

    pub fn noise_covariance(&self, n_y: usize) -> Result<Matrix> {
        match (&self.noise.variance, &self.noise.covariance) {
            (Some(_), Some(_)) => Err(config_err("noise", "give either `variance` or `covariance`, not both")),
            (Some(v), None) => {
                if !(v.is_finite() && *v >= 0.0) {
                    return Err(config_err("noise.variance", format!("must be a finite non-negative number, got {v}")));
                }
                Ok(Matrix::identity(n_y).scale(*v))
            }
            (None, Some(rows)) => weight("noise.covariance", &WeightSpec::Matrix(rows.clone()), n_y),
            (None, None) => Ok(Matrix::zeros(n_y, n_y)),
        }
    }

    /// Scenario for one controller, with all dimension checks done.
    pub fn scenario(&self, kind: PredictorKind) -> Result<Scenario> {
        let plant = self.plant()?;
        let (n_u, n_y) = (plant.n_u(), plant.n_y());
        let c = &self.control;
        expect_len("control.r_y", &c.r_y, n_y, "plant outputs")?;
        for (key, v, n, what) in [
            ("control.u_lo", &c.u_lo, n_u, "plant inputs"),
            ("control.u_hi", &c.u_hi, n_u, "plant inputs"),
            ("control.y_lo", &c.y_lo, n_y, "plant outputs"),
            ("control.y_hi", &c.y_hi, n_y, "plant outputs"),
        ] {
            expect_len(key, v, n, what)?;
        }
        let r_u = match &c.r_u {
            InputReference::Values(v) => {
                expect_len("control.r_u", v, n_u, "plant inputs")?;
                Some(v.clone())
            }
            InputReference::Method(m) if m == "plant" => {
                Some(plant.steady_state_input(&c.r_y).map_err(|e| config_err("control.r_u", e))?)
            }
            InputReference::Method(m) if m == "estimate" => None,
            InputReference::Method(m) => {
                return Err(config_err("control.r_u", format!("expected a list, \"plant\" or \"estimate\", got \"{m}\"")))
            }
        };
        let weights = Weights {
            q: weight("control.q", &c.q, n_y)?,
            r: weight("control.r", &c.r, n_u)?,
            lambda: weight("control.lambda", &c.lambda, n_y)?,
        };
        let s = Scenario {
            order: self.plant.order.unwrap_or(plant.n()),
            noise_cov: self.noise_covariance(n_y)?,
            plant,
            controller: kind,
            t_ini: self.data.t_ini,
            horizon: self.data.horizon,
            columns: self.data.columns,
            pe_amplitude: self.data.pe_amplitude,
            r_y: c.r_y.clone(),
            r_u,
            u_lo: c.u_lo.clone(),
            u_hi: c.u_hi.clone(),
            y_lo: c.y_lo.clone(),
            y_hi: c.y_hi.clone(),
            weights,
            steps: c.steps,
            seed: self.run.seed,
        };
        s.validate().map_err(|e| LabError::Config(format!("scenario: {e}")))?;
        Ok(s)
    }

    /// Semantic checks beyond the schema.
    pub fn validate(&self) -> Result<()> {
        let kinds = self.controllers()?;
        if kinds.is_empty() {
            return Err(config_err("control.controllers", "list at least one controller"));
        }
        self.scenario(kinds[0])?;
        if self.monte_carlo.runs == 0 {
            return Err(config_err("monte_carlo.runs", "must be at least 1"));
        }
        if self.sensitivity.seeds == 0 {
            return Err(config_err("sensitivity.seeds", "must be at least 1"));
        }
        if self.sensitivity.t_ini.contains(&0) {
            return Err(config_err("sensitivity.t_ini", "entries must be positive"));
        }
        if self.sensitivity.variances.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(config_err("sensitivity.variances", "entries must be finite and non-negative"));
        }
        if self.timing.t_h.iter().chain(&self.timing.columns).any(|v| *v == 0) {
            return Err(config_err("timing", "`t_h` and `columns` entries must be positive"));
        }
        if self.timing.repeats == 0 {
            return Err(config_err("timing.repeats", "must be at least 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_noise_free_preset() {
        let cfg = Config::from_toml("").unwrap();
        let s = cfg.scenario(PredictorKind::Ntdpc).unwrap();
        assert_eq!(s, Scenario::boeing747());
    }

    #[test]
    fn resolved_echo_round_trips() {
        let cfg = Config::from_toml("[noise]\nvariance = 0.25\n[control]\nq = [[1.0, 0.0], [0.0, 2.0]]\n").unwrap();
        let again = Config::from_toml(&cfg.resolved_toml()).unwrap();
        assert_eq!(cfg, again);
    }
}
