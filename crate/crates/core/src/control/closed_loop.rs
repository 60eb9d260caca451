use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::scenario::Scenario;
use crate::error::{Error, Result};
use crate::hankel::{build_hankels, initial_window, required_samples, stack_past_future, HankelSet};
use crate::linalg::{dot, pinv, Matrix, DEFAULT_PINV_TOL};
use crate::noise::{derive_seed, NoiseModel, STREAM_DATA_NOISE, STREAM_LOOP_NOISE};
use crate::plant::simulate_lti;
use crate::predict::{
    build_ntdpc, build_smmpc, build_spc, factor_zp, sensitivity_index, LinearPredictor, PredictorDims, PredictorKind,
};
use crate::qp::{BoxBounds, QpSettings, QpStatus, TrackingQp, TrackingSolver};
use crate::signal::{apply_scaling, compute_scaling, generate_pe_input, ScaleDirection, ScalingPair, Signal, Trajectory};

/// Source of wall-clock time for per-solve timing.
pub trait Clock {
    fn seconds(&self) -> f64;
}

/// Clock that always reads zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}

/// Seeds of the excitation/data noise and of the loop noise for a run.
pub fn run_seeds(master: u64) -> (u64, u64) {
    (derive_seed(master, 0), derive_seed(master, 1))
}

/// Offline experiment: excitation from rest with measurement noise.
pub fn collect_data(s: &Scenario) -> Result<Trajectory> {
    let (data_seed, _) = run_seeds(s.seed);
    let len = required_samples(s.t_ini, s.horizon, s.columns);
    let u = generate_pe_input(s.plant.n_u(), len, s.pe_amplitude, data_seed)?;
    let noise = NoiseModel::new(s.noise_cov.clone(), data_seed, STREAM_DATA_NOISE)?;
    simulate_lti(&s.plant, &vec![0.0; s.plant.n()], &u, Some(&noise))
}

#[derive(Debug, Clone)]
pub struct Identified {
    pub predictor: LinearPredictor,
    pub hankel: HankelSet,
    /// Sensitivity index of the past Hankel split (NTDPC only).
    pub sensitivity: Option<f64>,
    pub warnings: Vec<String>,
}

/// Scales the recorded data and builds the scenario's predictor.
pub fn identify(s: &Scenario, data: &Trajectory) -> Result<Identified> {
    let scaling = compute_scaling(data)?;
    let scaled = apply_scaling(data, &scaling, ScaleDirection::Forward)?;
    let hankel = build_hankels(&scaled, s.t_ini, s.horizon, s.columns)?;
    let dims = PredictorDims {
        n: s.order,
        n_u: s.plant.n_u(),
        n_y: s.plant.n_y(),
        t_ini: s.t_ini,
        horizon: s.horizon,
    };
    let (predictor, sensitivity, warnings) = match s.controller {
        PredictorKind::Ntdpc => {
            let (zp, zf) = stack_past_future(&hankel);
            let inv_my: Vec<f64> = scaling.my.iter().map(|m| 1.0 / m).collect();
            let sigma_scaled = s.noise_cov.scale_rows(&inv_my).scale_cols(&inv_my);
            let p = build_ntdpc(&zp, &zf, &sigma_scaled, dims, scaling)?;
            let si = p.sensitivity_index()?;
            (p.linear(), Some(si), p.warnings)
        }
        PredictorKind::Spc => (build_spc(&hankel, s.order, scaling)?.linear(), None, Vec::new()),
        PredictorKind::Smmpc => {
            let (zp, zf) = stack_past_future(&hankel);
            (build_smmpc(&zp, &zf, dims, scaling)?.linear(), None, Vec::new())
        }
    };
    Ok(Identified { predictor, hankel, sensitivity, warnings })
}

/// Sensitivity index of the rank split of the scaled past Hankel matrix,
/// without building a predictor.
pub fn past_sensitivity(s: &Scenario, data: &Trajectory) -> Result<f64> {
    let scaling = compute_scaling(data)?;
    let scaled = apply_scaling(data, &scaling, ScaleDirection::Forward)?;
    let hankel = build_hankels(&scaled, s.t_ini, s.horizon, s.columns)?;
    let zp = Matrix::vstack(&[&hankel.up, &hankel.yp]);
    let dims = PredictorDims {
        n: s.order,
        n_u: s.plant.n_u(),
        n_y: s.plant.n_y(),
        t_ini: s.t_ini,
        horizon: s.horizon,
    };
    let part = factor_zp(&zp, &dims)?;
    sensitivity_index(&part.sigma1, &part.sigma2)
}

/// Constant input that the predictor maps to the constant output `r_y`
/// (least squares over the horizon), in physical units.
pub fn estimate_steady_input(p: &LinearPredictor, r_y: &[f64]) -> Result<Vec<f64>> {
    let d = p.dims;
    let ys = p.scaling.scale_y(r_y);
    let ut = d.u_ini_len();
    let repeat = |dim: usize, count: usize| {
        Matrix::from_fn(dim * count, dim, |i, j| if i % dim == j { 1.0 } else { 0.0 })
    };
    let zu = p.z_map.slice_cols(0..ut).matmul(&repeat(d.n_u, d.t_ini));
    let zy = p.z_map.slice_cols(ut..d.z_len()).matmul(&repeat(d.n_y, d.t_ini));
    let lhs = &zu + &p.u_map.matmul(&repeat(d.n_u, d.horizon));
    let rhs = (&repeat(d.n_y, d.horizon) - &zy).mul_vec(&ys);
    let us = pinv(&lhs, DEFAULT_PINV_TOL)?.mul_vec(&rhs);
    Ok(p.scaling.unscale_u(&us))
}

/// Per-step record of a closed-loop run; index `i` is time `start + i`.
#[derive(Debug, Clone)]
pub struct RunLog {
    pub controller: PredictorKind,
    pub start: usize,
    pub u: Signal,
    pub y: Signal,
    pub y_clean: Signal,
    pub status: Vec<QpStatus>,
    pub iterations: Vec<usize>,
    pub stage_cost: Vec<f64>,
    pub solve_seconds: Vec<f64>,
    /// Largest excursion of a QP-predicted output outside the output box.
    pub predicted_box_violation: Vec<f64>,
    pub r_y: Vec<f64>,
    pub r_u: Vec<f64>,
    pub sensitivity: Option<f64>,
    pub warnings: Vec<String>,
}

impl RunLog {
    pub fn len(&self) -> usize {
        self.stage_cost.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stage_cost.is_empty()
    }

    /// `‖y_clean − r_y‖∞` at step `i`.
    pub fn tracking_error(&self, i: usize) -> f64 {
        self.y_clean.sample(i).iter().zip(&self.r_y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn count_status(&self, status: QpStatus) -> usize {
        self.status.iter().filter(|s| **s == status).count()
    }
}

/// `‖y − r_y‖²_Q + ‖u − r_u‖²_R`.
pub fn stage_cost(y: &[f64], u: &[f64], r_y: &[f64], r_u: &[f64], q: &Matrix, r: &Matrix) -> f64 {
    let ey: Vec<f64> = y.iter().zip(r_y).map(|(a, b)| a - b).collect();
    let eu: Vec<f64> = u.iter().zip(r_u).map(|(a, b)| a - b).collect();
    dot(&ey, &q.mul_vec(&ey)) + dot(&eu, &r.mul_vec(&eu))
}

/// Cumulative sum of realized stage costs.
pub fn performance_index(log: &RunLog) -> Vec<f64> {
    let mut acc = 0.0;
    log.stage_cost
        .iter()
        .map(|c| {
            acc += c;
            acc
        })
        .collect()
}

/// Receding-horizon loop state. Time `k` counts plant samples from rest;
/// the first `T_ini + 1` samples use zero input.
pub struct ClosedLoop<'c> {
    scenario: Scenario,
    predictor: LinearPredictor,
    scaling: ScalingPair,
    template: TrackingQp,
    solver: TrackingSolver,
    noise: NoiseModel,
    state: Vec<f64>,
    u_hist: Signal,
    y_hist: Signal,
    y_clean_hist: Signal,
    r_u: Vec<f64>,
    last_u: Vec<f64>,
    clock: &'c dyn Clock,
    log: RunLog,
}

impl<'c> ClosedLoop<'c> {
    pub fn new(s: &Scenario, clock: &'c dyn Clock) -> Result<Self> {
        s.validate()?;
        let data = collect_data(s)?;
        let id = identify(s, &data)?;
        Self::with_predictor(s, id.predictor, id.sensitivity, id.warnings, clock)
    }

    pub fn with_predictor(
        s: &Scenario,
        predictor: LinearPredictor,
        sensitivity: Option<f64>,
        warnings: Vec<String>,
        clock: &'c dyn Clock,
    ) -> Result<Self> {
        s.validate()?;
        let d = predictor.dims;
        if d.n_u != s.plant.n_u() || d.n_y != s.plant.n_y() || d.t_ini != s.t_ini || d.horizon != s.horizon {
            return Err(Error::Argument("predictor dimensions do not match the scenario".into()));
        }
        let scaling = predictor.scaling.clone();
        let r_u = match &s.r_u {
            Some(r) => r.clone(),
            None => estimate_steady_input(&predictor, &s.r_y)?,
        };
        let n = s.horizon;
        let (mu, my) = (&scaling.mu, &scaling.my);
        // weights move to scaled coordinates so the cost is unchanged
        let w = &s.weights;
        let q_s = Matrix::block_diag_repeat(&w.q.scale_rows(my).scale_cols(my), n);
        let r_s = Matrix::block_diag_repeat(&w.r.scale_rows(mu).scale_cols(mu), n);
        let l_s = Matrix::block_diag_repeat(&w.lambda.scale_rows(my).scale_cols(my), n);
        let u_box = BoxBounds::repeat(&scaling.scale_u(&s.u_lo), &scaling.scale_u(&s.u_hi), n)?;
        let y_box = BoxBounds::repeat(&scaling.scale_y(&s.y_lo), &scaling.scale_y(&s.y_hi), n)?;
        let template = TrackingQp {
            p1: predictor.z_map.clone(),
            p2: predictor.u_map.clone(),
            z_ini: vec![0.0; d.z_len()],
            r_y: scaling.scale_y(&s.r_y).repeat(n),
            r_u: scaling.scale_u(&r_u).repeat(n),
            q: q_s,
            r: r_s,
            lambda: l_s,
            u_box,
            y_box,
            use_slack: s.controller == PredictorKind::Ntdpc,
        };
        let solver = TrackingSolver::new(&template, QpSettings::default())?.with_blocks(d.n_u, d.n_y);
        let (_, loop_seed) = run_seeds(s.seed);
        let noise = NoiseModel::new(s.noise_cov.clone(), loop_seed, STREAM_LOOP_NOISE)?;
        let (n_u, n_y) = (d.n_u, d.n_y);
        let log = RunLog {
            controller: s.controller,
            start: s.t_ini + 1,
            u: Signal::new(n_u),
            y: Signal::new(n_y),
            y_clean: Signal::new(n_y),
            status: Vec::new(),
            iterations: Vec::new(),
            stage_cost: Vec::new(),
            solve_seconds: Vec::new(),
            predicted_box_violation: Vec::new(),
            r_y: s.r_y.clone(),
            r_u: r_u.clone(),
            sensitivity,
            warnings,
        };
        let mut cl = ClosedLoop {
            scenario: s.clone(),
            predictor,
            scaling,
            template,
            solver,
            noise,
            state: vec![0.0; s.plant.n()],
            u_hist: Signal::new(n_u),
            y_hist: Signal::new(n_y),
            y_clean_hist: Signal::new(n_y),
            r_u,
            last_u: vec![0.0; n_u],
            clock,
            log,
        };
        let zero = vec![0.0; n_u];
        for _ in 0..=s.t_ini {
            cl.measure();
            cl.apply(&zero);
        }
        Ok(cl)
    }

    /// Current time index (the next output to be measured).
    pub fn time(&self) -> usize {
        self.y_hist.len()
    }

    pub fn predictor(&self) -> &LinearPredictor {
        &self.predictor
    }

    pub fn input_reference(&self) -> &[f64] {
        &self.r_u
    }

    fn measure(&mut self) -> (Vec<f64>, Vec<f64>) {
        let k = self.y_hist.len() as u64;
        let yc = self.scenario.plant.output(&self.state);
        let ym: Vec<f64> = yc.iter().zip(self.noise.sample(k)).map(|(a, b)| a + b).collect();
        self.y_hist.push(&ym);
        self.y_clean_hist.push(&yc);
        (ym, yc)
    }

    fn apply(&mut self, u: &[f64]) {
        self.u_hist.push(u);
        self.state = self.scenario.plant.step(&self.state, u);
    }

    /// Measured window `(u_ini, y_ini)` at time `k` in physical units.
    pub fn window(&self, k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        initial_window(&self.u_hist, &self.y_hist, k, self.scenario.t_ini)
    }

    /// Measures `y(k)`, solves the QP on the latest window and applies `u(k)`.
    pub fn step(&mut self) -> Result<()> {
        let (_, yc) = self.measure();
        let k = self.y_hist.len() - 1;
        let (u_ini, y_ini) = self.window(k)?;
        let mut z = self.scaling.scale_u(&u_ini);
        z.extend(self.scaling.scale_y(&y_ini));
        self.template.z_ini = z;
        let t0 = self.clock.seconds();
        let sol = self.solver.solve(&self.template)?;
        let elapsed = self.clock.seconds() - t0;
        let n_u = self.scenario.plant.n_u();
        let u = match sol.status {
            QpStatus::Infeasible => self.last_u.clone(),
            _ => {
                let raw = self.scaling.unscale_u(&sol.u_n[..n_u]);
                raw.iter()
                    .enumerate()
                    .map(|(i, v)| v.max(self.scenario.u_lo[i]).min(self.scenario.u_hi[i]))
                    .collect()
            }
        };
        let violation = if sol.status != QpStatus::Solved {
            0.0
        } else {
            let yb = &self.template.y_box;
            let my = &self.scaling.my;
            sol.y_hat
                .iter()
                .zip(yb.lo.iter().zip(&yb.hi))
                .enumerate()
                .map(|(i, (y, (l, h)))| (l - y).max(y - h).max(0.0) * my[i % my.len()])
                .fold(0.0, f64::max)
        };
        let w = &self.scenario.weights;
        let cost = stage_cost(&yc, &u, &self.scenario.r_y, &self.r_u, &w.q, &w.r);
        let ym = self.y_hist.sample(k).to_vec();
        self.log.u.push(&u);
        self.log.y.push(&ym);
        self.log.y_clean.push(&yc);
        self.log.status.push(sol.status);
        self.log.iterations.push(sol.iterations);
        self.log.stage_cost.push(cost);
        self.log.solve_seconds.push(elapsed);
        self.log.predicted_box_violation.push(violation);
        self.apply(&u);
        self.last_u = u;
        Ok(())
    }

    /// QP solved at the most recent step.
    pub fn current_qp(&self) -> &TrackingQp {
        &self.template
    }

    pub fn log(&self) -> &RunLog {
        &self.log
    }

    pub fn into_log(self) -> RunLog {
        self.log
    }
}

/// Data collection, predictor build and `steps` receding-horizon steps.
pub fn run_closed_loop(s: &Scenario) -> Result<RunLog> {
    run_closed_loop_timed(s, &NoClock)
}

pub fn run_closed_loop_timed(s: &Scenario, clock: &dyn Clock) -> Result<RunLog> {
    let mut cl = ClosedLoop::new(s, clock)?;
    for _ in 0..s.steps {
        cl.step()?;
    }
    Ok(cl.into_log())
}
