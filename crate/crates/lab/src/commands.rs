//! Subcommand bodies. Each writes its artifacts into the output directory
//! and returns the paths written; human-readable notes go to stdout.

use std::fs;
use std::path::{Path, PathBuf};

use ntdpc_core::control::{performance_index, TimingMethod};
use ntdpc_core::predict::PredictorKind;

use crate::config::{Config, RESOLVED_CONFIG_FILE};
use crate::error::{LabError, Result};
use crate::experiments::{monte_carlo, sensitivity_sweep, simulate, timing_benchmark, TimingRow};
use crate::output::{
    comparison_table, mc_runs_table, mc_table, predictor_table, run_log_table, save_predictor, solve_time_stats,
    summary_table, trajectory_table,
};
use crate::svg::{render, PlotSpec, Series};
use crate::table::{Cell, Table};

/// Environment variable that overrides `run.output_dir`.
pub const OUT_DIR_ENV: &str = "NTDPC_OUT_DIR";

/// Output directory: the environment override if set, else the config value.
pub fn output_dir(cfg: &Config) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(&cfg.run.output_dir),
    }
}

/// Collects written paths and prints them once the command is done.
pub struct Artifacts {
    dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
        Ok(Artifacts { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn table(&mut self, name: &str, t: &Table) -> Result<()> {
        let p = self.dir.join(name);
        t.write(&p)?;
        self.written.push(p);
        Ok(())
    }

    fn text(&mut self, name: &str, s: &str) -> Result<()> {
        let p = self.dir.join(name);
        fs::write(&p, s).map_err(|e| LabError::io(&p, e))?;
        self.written.push(p);
        Ok(())
    }

    fn plot(&mut self, name: &str, spec: &PlotSpec, data: &Table) -> Result<()> {
        self.text(name, &render(spec, data)?)
    }

    fn config(&mut self, cfg: &Config) -> Result<()> {
        self.text(RESOLVED_CONFIG_FILE, &cfg.resolved_toml())
    }
}

fn output_plot(title: &str, n_y: usize, r_y: &[f64], suffix: &str) -> PlotSpec {
    let mut spec = PlotSpec::new(title, "k").labels("time step k", "output");
    for i in 1..=n_y {
        let s = Series::new(format!("y_{i}{suffix}"), format!("y_{i}"));
        spec = spec.series(if suffix.is_empty() { s } else { s.with_band(format!("y_{i}_std")) });
    }
    for (i, r) in r_y.iter().enumerate() {
        spec = spec.ref_line(*r, format!("r_y{}", i + 1));
    }
    spec
}

fn input_plot(title: &str, n_u: usize, suffix: &str) -> PlotSpec {
    let mut spec = PlotSpec::new(title, "k").labels("time step k", "input");
    for i in 1..=n_u {
        let s = Series::new(format!("u_{i}{suffix}"), format!("u_{i}"));
        spec = spec.series(if suffix.is_empty() { s } else { s.with_band(format!("u_{i}_std")) });
    }
    spec
}

/// Parses a controller argument: a name or `all`.
pub fn parse_controllers(arg: Option<&str>, cfg: &Config) -> Result<Vec<PredictorKind>> {
    match arg {
        None => cfg.controllers(),
        Some(a) if a.eq_ignore_ascii_case("all") => Ok(PredictorKind::ALL.to_vec()),
        Some(a) => PredictorKind::parse(a)
            .map(|k| vec![k])
            .ok_or_else(|| LabError::Config(format!("`--controller`: unknown controller \"{a}\" (expected ntdpc, spc, smmpc or all)"))),
    }
}

pub fn cmd_simulate(cfg: &Config, kinds: &[PredictorKind], dump_qp: Option<usize>, out: &Path) -> Result<Artifacts> {
    let scenarios = kinds.iter().map(|&k| cfg.scenario(k)).collect::<Result<Vec<_>>>()?;
    let mut art = Artifacts::create(out)?;
    art.config(cfg)?;
    let mut logs = Vec::new();
    for s in &scenarios {
        let name = s.controller.name();
        let res = simulate(s, dump_qp)?;
        let log = &res.log;
        art.table(&format!("trajectory_{name}.csv"), &trajectory_table(log))?;
        let run = run_log_table(log);
        art.table(&format!("run_{name}.csv"), &run)?;
        save_predictor(&out.join(format!("predictor_{name}.bin")), &res.predictor)?;
        art.written.push(out.join(format!("predictor_{name}.bin")));
        art.table(&format!("predictor_{name}.csv"), &predictor_table(&res.predictor))?;
        if let (Some(t), Some(k)) = (&res.qp_dump, dump_qp) {
            art.table(&format!("qp_{name}_k{k}.csv"), t)?;
        }
        let upper = name.to_uppercase();
        art.plot(&format!("outputs_{name}.svg"), &output_plot(&format!("{upper} outputs"), log.y.dim(), &log.r_y, ""), &run)?;
        art.plot(&format!("inputs_{name}.svg"), &input_plot(&format!("{upper} inputs"), log.u.dim(), ""), &run)?;
        let (med, mean, max) = solve_time_stats(log);
        let last = log.len().saturating_sub(1);
        println!(
            "{name}: final error {:.3e}, cumulative index {:.6e}, solve time median {:.3e} s mean {:.3e} s max {:.3e} s",
            log.tracking_error(last),
            performance_index(log).last().copied().unwrap_or(0.0),
            med,
            mean,
            max
        );
        for w in &log.warnings {
            println!("{name}: warning: {w}");
        }
        logs.push(res.log);
    }
    art.table("summary.csv", &summary_table(&logs))?;
    Ok(art)
}

pub fn cmd_monte_carlo(cfg: &Config, kinds: &[PredictorKind], out: &Path) -> Result<Artifacts> {
    let scenarios = kinds.iter().map(|&k| cfg.scenario(k)).collect::<Result<Vec<_>>>()?;
    let runs = cfg.monte_carlo.runs;
    let mut art = Artifacts::create(out)?;
    art.config(cfg)?;
    let mut all = Vec::new();
    for s in &scenarios {
        let name = s.controller.name();
        let res = monte_carlo(s, runs)?;
        let t = mc_table(&res.stats);
        art.table(&format!("mc_{name}.csv"), &t)?;
        art.table(&format!("mc_runs_{name}.csv"), &mc_runs_table(&res.seeds, &res.outcomes))?;
        let upper = name.to_uppercase();
        let n_y = res.stats.y_mean.first().map_or(0, Vec::len);
        let n_u = res.stats.u_mean.first().map_or(0, Vec::len);
        art.plot(
            &format!("mc_outputs_{name}.svg"),
            &output_plot(&format!("{upper} outputs over {runs} runs (mean, ±1 std)"), n_y, &s.r_y, "_mean"),
            &t,
        )?;
        art.plot(&format!("mc_inputs_{name}.svg"), &input_plot(&format!("{upper} inputs over {runs} runs"), n_u, "_mean"), &t)?;
        println!(
            "{name}: {} of {runs} runs completed, mean final index {:.6e}",
            res.stats.completed,
            res.stats.mean_final_index()
        );
        for m in &res.stats.abort_messages {
            println!("{name}: aborted run: {m}");
        }
        all.push(res.stats);
    }
    art.table("mc_comparison.csv", &comparison_table(&all))?;
    if let Some(first) = all.first() {
        let mut headers = vec!["k".to_string()];
        for s in &all {
            headers.push(format!("{}_index_mean", s.controller.name()));
            headers.push(format!("{}_index_std", s.controller.name()));
        }
        let mut t = Table::new(headers);
        for k in 0..first.steps() {
            let mut row = vec![Cell::from(first.start + k)];
            for s in &all {
                row.push(Cell::Num(s.index_mean[k]));
                row.push(Cell::Num(s.index_std[k]));
            }
            t.push(row);
        }
        let mut spec = PlotSpec::new("Cumulative performance index (mean, ±1 std)", "k")
            .labels("time step k", "cumulative index")
            .log_y(true);
        for s in &all {
            let n = s.controller.name();
            spec = spec.series(Series::new(format!("{n}_index_mean"), n.to_uppercase()).with_band(format!("{n}_index_std")));
        }
        art.plot("mc_index.svg", &spec, &t)?;
    }
    Ok(art)
}

fn variance_label(v: f64) -> String {
    format!("{v}")
}

pub fn cmd_sensitivity(cfg: &Config, out: &Path) -> Result<Artifacts> {
    let grid = &cfg.sensitivity;
    let cells = sensitivity_sweep(cfg, grid.seeds)?;
    let mut art = Artifacts::create(out)?;
    art.config(cfg)?;
    let mut t = Table::new(["t_ini", "variance", "seeds", "mean_is", "std_is"]);
    for c in &cells {
        t.push(vec![Cell::from(c.t_ini), Cell::Num(c.variance), Cell::from(c.values.len()), Cell::Num(c.mean()), Cell::Num(c.std())]);
    }
    art.table("sensitivity.csv", &t)?;
    // one column pair per variance for plotting
    let mut headers = vec!["t_ini".to_string()];
    for v in &grid.variances {
        headers.push(format!("mean_{}", variance_label(*v)));
        headers.push(format!("std_{}", variance_label(*v)));
    }
    let mut wide = Table::new(headers);
    let nv = grid.variances.len();
    for (i, &t_ini) in grid.t_ini.iter().enumerate() {
        let mut row = vec![Cell::from(t_ini)];
        for c in &cells[i * nv..(i + 1) * nv] {
            row.push(Cell::Num(c.mean()));
            row.push(Cell::Num(c.std()));
        }
        wide.push(row);
    }
    let mut spec = PlotSpec::new(format!("Past-data sensitivity over {} seeds", grid.seeds), "t_ini")
        .labels("T_ini", "I_s")
        .ref_line(grid.threshold, format!("I_s = {}", grid.threshold));
    for v in &grid.variances {
        let l = variance_label(*v);
        spec = spec.series(Series::new(format!("mean_{l}"), format!("σ² = {l}")).with_band(format!("std_{l}")));
    }
    art.plot("sensitivity.svg", &spec, &wide)?;
    for c in &cells {
        println!("T_ini {:>3}, σ² {:<5}: mean I_s {:.4}, std {:.4}", c.t_ini, c.variance, c.mean(), c.std());
    }
    Ok(art)
}

/// `timing.csv` holds the measurements; `timing_model.csv` holds only the
/// machine-independent cost model.
pub fn cmd_timing(cfg: &Config, out: &Path) -> Result<(Artifacts, Vec<TimingRow>)> {
    let tc = &cfg.timing;
    let rows = timing_benchmark(&tc.t_h, &tc.columns, tc.repeats, cfg.run.seed)?;
    let mut art = Artifacts::create(out)?;
    art.config(cfg)?;
    let mut measured = Table::new(["method", "T_h", "M", "median_seconds", "flops_model"]);
    let mut model = Table::new(["method", "T_h", "M", "flops_model", "ratio_to_spc"]);
    for r in &rows {
        measured.push(vec![Cell::from(r.method.name()), Cell::from(r.t_h), Cell::from(r.m), Cell::Num(r.median_seconds), Cell::Num(r.flops_model)]);
        let spc = ntdpc_core::control::flops_model(TimingMethod::Spc, r.t_h, r.m);
        model.push(vec![Cell::from(r.method.name()), Cell::from(r.t_h), Cell::from(r.m), Cell::Num(r.flops_model), Cell::Num(r.flops_model / spc)]);
    }
    art.table("timing.csv", &measured)?;
    art.table("timing_model.csv", &model)?;
    for pair in rows.chunks(2) {
        if let [spc, ntdpc] = pair {
            println!(
                "T_h {:>3}, M {:>6}: spc {:.4e} s, ntdpc {:.4e} s, measured ratio {:.3}, model ratio {:.4}",
                spc.t_h,
                spc.m,
                spc.median_seconds,
                ntdpc.median_seconds,
                ntdpc.median_seconds / spc.median_seconds,
                ntdpc.flops_model / spc.flops_model
            );
        }
    }
    Ok((art, rows))
}
