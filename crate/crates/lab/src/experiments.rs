//! Experiment drivers: closed-loop simulation, parallel Monte Carlo, the
//! noise sensitivity sweep and the offline build timing benchmark.

use std::time::Instant;

use rayon::prelude::*;

use ntdpc_core::control::{
    collect_data, flops_model, ntdpc_workload, past_sensitivity, run_closed_loop, run_seed, siso_benchmark_data,
    spc_workload, Clock, ClosedLoop, McStats, RunLog, RunOutcome, Scenario, TimingMethod,
};
use ntdpc_core::predict::{LinearPredictor, PredictorKind};
use ntdpc_core::Matrix;

use crate::config::Config;
use crate::error::{CoreContext, LabError, Result};
use crate::output::{median_sorted, qp_dump_table};
use crate::table::Table;

/// Monotonic wall clock started at construction.
#[derive(Debug, Clone, Copy)]
pub struct StdClock(Instant);

impl StdClock {
    pub fn new() -> Self {
        StdClock(Instant::now())
    }
}

impl Default for StdClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for StdClock {
    fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

pub struct SimResult {
    pub log: RunLog,
    pub predictor: LinearPredictor,
    /// QP solved at the requested step, in dump form.
    pub qp_dump: Option<Table>,
}

/// One closed loop; `dump_qp` names an absolute time step whose QP is kept.
pub fn simulate(s: &Scenario, dump_qp: Option<usize>) -> Result<SimResult> {
    let clock = StdClock::new();
    let mut cl = ClosedLoop::new(s, &clock).in_module("control-loop")?;
    let first = cl.time();
    if let Some(k) = dump_qp {
        if k < first || k >= first + s.steps {
            return Err(LabError::Config(format!(
                "`--dump-qp`: step {k} is outside the controlled range {first}..{}",
                first + s.steps
            )));
        }
    }
    let mut qp_dump = None;
    for _ in 0..s.steps {
        cl.step().in_module("control-loop")?;
        if dump_qp == Some(cl.time() - 1) {
            let (qp, scale) = cl.current_qp().to_dense();
            qp_dump = Some(qp_dump_table(&qp, scale));
        }
    }
    let predictor = cl.predictor().clone();
    Ok(SimResult { log: cl.into_log(), predictor, qp_dump })
}

pub struct McResult {
    pub stats: McStats,
    pub seeds: Vec<u64>,
    pub outcomes: Vec<RunOutcome>,
}

/// Runs are spread over the rayon pool and aggregated in run order, so the
/// result equals the sequential `ntdpc_core::control::monte_carlo`.
pub fn monte_carlo(s: &Scenario, runs: usize) -> Result<McResult> {
    if runs == 0 {
        return Err(LabError::Config("`monte_carlo.runs`: must be at least 1".into()));
    }
    let seeds: Vec<u64> = (0..runs).map(|i| run_seed(s.seed, i)).collect();
    let outcomes: Vec<RunOutcome> = seeds
        .par_iter()
        .map(|&seed| run_closed_loop(&s.clone().with_seed(seed)).map_err(|e| e.to_string()))
        .collect();
    let stats = McStats::aggregate(s.controller, seeds.clone(), &outcomes).in_module("control-loop")?;
    Ok(McResult { stats, seeds, outcomes })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityCell {
    pub t_ini: usize,
    pub variance: f64,
    /// One value per seed, in seed order.
    pub values: Vec<f64>,
}

impl SensitivityCell {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Population standard deviation.
    pub fn std(&self) -> f64 {
        let m = self.mean();
        (self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.values.len() as f64).sqrt()
    }
}

/// Past-data sensitivity over the `t_ini × variance` grid with `N = T_ini`.
/// Seed `i` is shared by every cell so cells differ only in the grid values.
pub fn sensitivity_sweep(cfg: &Config, seeds: usize) -> Result<Vec<SensitivityCell>> {
    if seeds == 0 {
        return Err(LabError::Config("`sensitivity.seeds`: must be at least 1".into()));
    }
    let base = cfg.scenario(PredictorKind::Ntdpc)?;
    let n_y = base.plant.n_y();
    let grid = &cfg.sensitivity;
    let jobs: Vec<(usize, f64, usize)> = grid
        .t_ini
        .iter()
        .flat_map(|&t| grid.variances.iter().flat_map(move |&v| (0..seeds).map(move |i| (t, v, i))))
        .collect();
    let values: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(t, v, i)| {
            let mut s = base.clone();
            s.t_ini = t;
            s.horizon = t;
            s.noise_cov = Matrix::identity(n_y).scale(v);
            s.seed = run_seed(cfg.run.seed, i);
            let data = collect_data(&s).in_module("plant-data")?;
            past_sensitivity(&s, &data).in_module("predictors")
        })
        .collect();
    let mut values = values.into_iter();
    let mut cells = Vec::new();
    for &t in &grid.t_ini {
        for &v in &grid.variances {
            let vals = values.by_ref().take(seeds).collect::<Result<Vec<f64>>>()?;
            cells.push(SensitivityCell { t_ini: t, variance: v, values: vals });
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub method: TimingMethod,
    pub t_h: usize,
    pub m: usize,
    pub median_seconds: f64,
    pub flops_model: f64,
}

/// Order of the benchmark plant.
const SISO_ORDER: usize = 2;

/// Median wall time of each offline build on the calling thread. One
/// untimed run per method warms caches first.
pub fn timing_benchmark(t_h: &[usize], m: &[usize], repeats: usize, seed: u64) -> Result<Vec<TimingRow>> {
    if repeats == 0 {
        return Err(LabError::Config("`timing.repeats`: must be at least 1".into()));
    }
    let mut rows = Vec::new();
    for &t in t_h {
        for &cols in m {
            let h = siso_benchmark_data(t, cols, seed).in_module("plant-data")?;
            for method in [TimingMethod::Spc, TimingMethod::Ntdpc] {
                let run = || -> Result<Matrix> {
                    match method {
                        TimingMethod::Spc => spc_workload(&h),
                        TimingMethod::Ntdpc => ntdpc_workload(&h, SISO_ORDER),
                    }
                    .in_module("predictors")
                };
                run()?;
                let mut times = Vec::with_capacity(repeats);
                for _ in 0..repeats {
                    let t0 = Instant::now();
                    std::hint::black_box(run()?);
                    times.push(t0.elapsed().as_secs_f64());
                }
                times.sort_by(f64::total_cmp);
                rows.push(TimingRow {
                    method,
                    t_h: t,
                    m: cols,
                    median_seconds: median_sorted(&times),
                    flops_model: flops_model(method, t, cols),
                });
            }
        }
    }
    Ok(rows)
}
