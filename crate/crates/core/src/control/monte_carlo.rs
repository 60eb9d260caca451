use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::closed_loop::{performance_index, run_closed_loop, RunLog};
use super::scenario::Scenario;
use crate::error::{Error, Result};
use crate::noise::derive_seed;
use crate::predict::PredictorKind;

/// Seed of Monte Carlo run `run` under a master seed.
pub fn run_seed(master: u64, run: usize) -> u64 {
    derive_seed(master, 1_000 + run as u64)
}

/// Outcome of one run: its log, or the error that aborted it.
pub type RunOutcome = core::result::Result<RunLog, String>;

/// Per-step mean and population standard deviation across completed runs.
#[derive(Debug, Clone, PartialEq)]
pub struct McStats {
    pub controller: PredictorKind,
    pub seeds: Vec<u64>,
    pub completed: usize,
    pub aborted: usize,
    pub abort_messages: Vec<String>,
    pub start: usize,
    /// `[step][channel]`.
    pub u_mean: Vec<Vec<f64>>,
    pub u_std: Vec<Vec<f64>>,
    pub y_mean: Vec<Vec<f64>>,
    pub y_std: Vec<Vec<f64>>,
    pub index_mean: Vec<f64>,
    pub index_std: Vec<f64>,
    /// Final cumulative index of each completed run, in run order.
    pub final_index: Vec<f64>,
    /// Largest `‖y‖∞` seen in any completed run.
    pub max_abs_output: f64,
}

impl McStats {
    pub fn runs(&self) -> usize {
        self.seeds.len()
    }

    pub fn steps(&self) -> usize {
        self.index_mean.len()
    }

    pub fn mean_final_index(&self) -> f64 {
        self.index_mean.last().copied().unwrap_or(f64::NAN)
    }

    /// Aggregates outcomes given in run order.
    pub fn aggregate(controller: PredictorKind, seeds: Vec<u64>, outcomes: &[RunOutcome]) -> Result<Self> {
        let logs: Vec<&RunLog> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
        let abort_messages: Vec<String> = outcomes.iter().filter_map(|o| o.as_ref().err().cloned()).collect();
        let first = match logs.first() {
            Some(l) => *l,
            None => {
                return Err(Error::Argument(alloc::format!(
                    "all {} Monte Carlo runs aborted{}",
                    outcomes.len(),
                    abort_messages.first().map(|m| alloc::format!(": {m}")).unwrap_or_default()
                )))
            }
        };
        let steps = first.len();
        if logs.iter().any(|l| l.len() != steps) {
            return Err(Error::Argument("Monte Carlo runs have different lengths".into()));
        }
        let indices: Vec<Vec<f64>> = logs.iter().map(|l| performance_index(l)).collect();
        let (u_mean, u_std) = channel_stats(&logs, |l, k| l.u.sample(k));
        let (y_mean, y_std) = channel_stats(&logs, |l, k| l.y.sample(k));
        let mut index_mean = Vec::with_capacity(steps);
        let mut index_std = Vec::with_capacity(steps);
        for k in 0..steps {
            let (m, s) = mean_std(indices.iter().map(|v| v[k]));
            index_mean.push(m);
            index_std.push(s);
        }
        let max_abs_output = logs
            .iter()
            .flat_map(|l| l.y.as_slice().iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(McStats {
            controller,
            seeds,
            completed: logs.len(),
            aborted: outcomes.len() - logs.len(),
            abort_messages,
            start: first.start,
            u_mean,
            u_std,
            y_mean,
            y_std,
            index_mean,
            index_std,
            final_index: indices.iter().map(|v| v.last().copied().unwrap_or(0.0)).collect(),
            max_abs_output,
        })
    }
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, libm::sqrt(var))
}

fn channel_stats<'a>(
    logs: &[&'a RunLog],
    pick: impl Fn(&'a RunLog, usize) -> &'a [f64],
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let steps = logs[0].len();
    let dim = pick(logs[0], 0).len();
    let mut means = Vec::with_capacity(steps);
    let mut stds = Vec::with_capacity(steps);
    for k in 0..steps {
        let mut m = Vec::with_capacity(dim);
        let mut s = Vec::with_capacity(dim);
        for c in 0..dim {
            let (a, b) = mean_std(logs.iter().map(|l| pick(l, k)[c]));
            m.push(a);
            s.push(b);
        }
        means.push(m);
        stds.push(s);
    }
    (means, stds)
}

/// Sequential Monte Carlo over `runs` derived seeds.
pub fn monte_carlo(s: &Scenario, runs: usize) -> Result<McStats> {
    if runs == 0 {
        return Err(Error::Argument("Monte Carlo needs at least one run".into()));
    }
    let seeds: Vec<u64> = (0..runs).map(|i| run_seed(s.seed, i)).collect();
    let outcomes: Vec<RunOutcome> = seeds
        .iter()
        .map(|&seed| run_closed_loop(&s.clone().with_seed(seed)).map_err(|e| e.to_string()))
        .collect();
    McStats::aggregate(s.controller, seeds, &outcomes)
}
