//! Conversions from run results to tables, plus the binary and CSV forms
//! of predictor bundles and QP dumps.

use std::fs;
use std::path::Path;

use ntdpc_core::control::{performance_index, McStats, RunLog, RunOutcome};
use ntdpc_core::predict::{LinearPredictor, PredictorDims, PredictorKind};
use ntdpc_core::qp::{DenseQp, QpStatus};
use ntdpc_core::signal::{ScalingPair, Signal};
use ntdpc_core::Matrix;

use crate::error::{CoreContext, LabError, Result};
use crate::table::{Cell, Table};

fn channel_headers(prefix: &str, dim: usize, suffix: &str) -> Vec<String> {
    (1..=dim).map(|i| format!("{prefix}_{i}{suffix}")).collect()
}

/// `k,u_1..,y_1..` with measured outputs.
pub fn trajectory_table(log: &RunLog) -> Table {
    let (n_u, n_y) = (log.u.dim(), log.y.dim());
    let mut headers = vec!["k".to_string()];
    headers.extend(channel_headers("u", n_u, ""));
    headers.extend(channel_headers("y", n_y, ""));
    let mut t = Table::new(headers);
    for i in 0..log.len() {
        let mut row = vec![Cell::from(log.start + i)];
        row.extend(log.u.sample(i).iter().map(|&v| Cell::Num(v)));
        row.extend(log.y.sample(i).iter().map(|&v| Cell::Num(v)));
        t.push(row);
    }
    t
}

/// Reads a trajectory table back into `(k, u, y)`.
pub fn read_trajectory(t: &Table) -> Result<(Vec<usize>, Signal, Signal)> {
    let k: Vec<usize> = t.column("k")?.iter().map(|&v| v as usize).collect();
    let dims = |prefix: &str| t.headers.iter().filter(|h| h.starts_with(prefix)).count();
    let (n_u, n_y) = (dims("u_"), dims("y_"));
    let mut cols = Vec::new();
    for h in channel_headers("u", n_u, "").iter().chain(&channel_headers("y", n_y, "")) {
        cols.push(t.column(h)?);
    }
    let gather = |range: std::ops::Range<usize>| -> Vec<f64> {
        (0..t.len()).flat_map(|r| cols[range.clone()].iter().map(move |c| c[r])).collect()
    };
    let u = Signal::from_samples(n_u, gather(0..n_u)).in_module("signal")?;
    let y = Signal::from_samples(n_y, gather(n_u..n_u + n_y)).in_module("signal")?;
    Ok((k, u, y))
}

/// Full per-step log including clean outputs, costs and solver status.
pub fn run_log_table(log: &RunLog) -> Table {
    let (n_u, n_y) = (log.u.dim(), log.y.dim());
    let mut headers = vec!["k".to_string()];
    headers.extend(channel_headers("u", n_u, ""));
    headers.extend(channel_headers("y", n_y, ""));
    headers.extend(channel_headers("y", n_y, "_clean"));
    headers.extend(["stage_cost", "index", "qp_status", "qp_iterations", "predicted_box_violation"].map(String::from));
    let index = performance_index(log);
    let mut t = Table::new(headers);
    for i in 0..log.len() {
        let mut row = vec![Cell::from(log.start + i)];
        row.extend(log.u.sample(i).iter().map(|&v| Cell::Num(v)));
        row.extend(log.y.sample(i).iter().map(|&v| Cell::Num(v)));
        row.extend(log.y_clean.sample(i).iter().map(|&v| Cell::Num(v)));
        row.push(Cell::Num(log.stage_cost[i]));
        row.push(Cell::Num(index[i]));
        row.push(Cell::from(log.status[i].name()));
        row.push(Cell::from(log.iterations[i]));
        row.push(Cell::Num(log.predicted_box_violation[i]));
        t.push(row);
    }
    t
}

pub const SUMMARY_HEADERS: [&str; 10] = [
    "controller",
    "steps",
    "final_error",
    "final_stage_cost",
    "cumulative_index",
    "max_abs_input",
    "solved",
    "max_iters",
    "infeasible",
    "sensitivity",
];

/// One row per controller. Wall-clock figures are left out so the file is
/// reproducible; they are printed instead.
pub fn summary_table(logs: &[RunLog]) -> Table {
    let mut t = Table::new(SUMMARY_HEADERS);
    for log in logs {
        let last = log.len().saturating_sub(1);
        let final_error = if log.is_empty() { f64::NAN } else { log.tracking_error(last) };
        let max_u = log.u.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        t.push(vec![
            Cell::from(log.controller.name()),
            Cell::from(log.len()),
            Cell::Num(final_error),
            Cell::Num(log.stage_cost.last().copied().unwrap_or(f64::NAN)),
            Cell::Num(performance_index(log).last().copied().unwrap_or(0.0)),
            Cell::Num(max_u),
            Cell::from(log.count_status(QpStatus::Solved)),
            Cell::from(log.count_status(QpStatus::MaxIters)),
            Cell::from(log.count_status(QpStatus::Infeasible)),
            Cell::Num(log.sensitivity.unwrap_or(f64::NAN)),
        ]);
    }
    t
}

/// Median, mean and maximum solve time in seconds.
pub fn solve_time_stats(log: &RunLog) -> (f64, f64, f64) {
    let mut v = log.solve_seconds.clone();
    if v.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    v.sort_by(f64::total_cmp);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (median_sorted(&v), mean, v[v.len() - 1])
}

pub(crate) fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Per-step mean and std of every channel and of the cumulative index.
pub fn mc_table(stats: &McStats) -> Table {
    let n_u = stats.u_mean.first().map_or(0, Vec::len);
    let n_y = stats.y_mean.first().map_or(0, Vec::len);
    let mut headers = vec!["k".to_string()];
    for (p, d) in [("u", n_u), ("y", n_y)] {
        for i in 1..=d {
            headers.push(format!("{p}_{i}_mean"));
            headers.push(format!("{p}_{i}_std"));
        }
    }
    headers.push("index_mean".into());
    headers.push("index_std".into());
    let mut t = Table::new(headers);
    for k in 0..stats.steps() {
        let mut row = vec![Cell::from(stats.start + k)];
        for (m, s) in [(&stats.u_mean[k], &stats.u_std[k]), (&stats.y_mean[k], &stats.y_std[k])] {
            for (a, b) in m.iter().zip(s.iter()) {
                row.push(Cell::Num(*a));
                row.push(Cell::Num(*b));
            }
        }
        row.push(Cell::Num(stats.index_mean[k]));
        row.push(Cell::Num(stats.index_std[k]));
        t.push(row);
    }
    t
}

/// One row per run: seed, final cumulative index and abort message.
pub fn mc_runs_table(seeds: &[u64], outcomes: &[RunOutcome]) -> Table {
    let mut t = Table::new(["run", "seed", "final_index", "error"]);
    for (i, (seed, o)) in seeds.iter().zip(outcomes).enumerate() {
        let (v, msg) = match o {
            Ok(log) => (performance_index(log).last().copied().unwrap_or(0.0), String::new()),
            Err(e) => (f64::NAN, e.clone()),
        };
        t.push(vec![Cell::from(i), Cell::from(*seed), Cell::Num(v), Cell::from(msg)]);
    }
    t
}

pub const COMPARISON_HEADERS: [&str; 7] =
    ["controller", "runs", "completed", "aborted", "mean_final_index", "std_final_index", "max_abs_output"];

pub fn comparison_table(all: &[McStats]) -> Table {
    let mut t = Table::new(COMPARISON_HEADERS);
    for s in all {
        t.push(vec![
            Cell::from(s.controller.name()),
            Cell::from(s.runs()),
            Cell::from(s.completed),
            Cell::from(s.aborted),
            Cell::Num(s.mean_final_index()),
            Cell::Num(s.index_std.last().copied().unwrap_or(f64::NAN)),
            Cell::Num(s.max_abs_output),
        ]);
    }
    t
}

const BUNDLE_MAGIC: &[u8; 8] = b"NTDPCPB1";

fn kind_code(k: PredictorKind) -> u64 {
    PredictorKind::ALL.iter().position(|&x| x == k).expect("listed kind") as u64
}

fn kind_from_code(c: u64) -> Result<PredictorKind> {
    PredictorKind::ALL.get(c as usize).copied().ok_or_else(|| LabError::Data(format!("unknown predictor kind code {c}")))
}

/// Little-endian binary form: magic, kind, dimensions, scalings, then
/// `z_map` and `u_map` row-major. Round trips bit for bit.
pub fn predictor_to_bytes(p: &LinearPredictor) -> Vec<u8> {
    let d = &p.dims;
    let mut out = BUNDLE_MAGIC.to_vec();
    for v in [kind_code(p.kind), d.n as u64, d.n_u as u64, d.n_y as u64, d.t_ini as u64, d.horizon as u64] {
        out.extend(v.to_le_bytes());
    }
    for v in p.scaling.mu.iter().chain(&p.scaling.my).chain(p.z_map.as_slice()).chain(p.u_map.as_slice()) {
        out.extend(v.to_le_bytes());
    }
    out
}

pub fn predictor_from_bytes(bytes: &[u8]) -> Result<LinearPredictor> {
    let bad = |msg: &str| LabError::Data(format!("predictor bundle: {msg}"));
    if bytes.len() < 56 || &bytes[..8] != BUNDLE_MAGIC {
        return Err(bad("missing header"));
    }
    let word = |i: usize| u64::from_le_bytes(bytes[8 + 8 * i..16 + 8 * i].try_into().expect("8 bytes"));
    let kind = kind_from_code(word(0))?;
    let dims = PredictorDims {
        n: word(1) as usize,
        n_u: word(2) as usize,
        n_y: word(3) as usize,
        t_ini: word(4) as usize,
        horizon: word(5) as usize,
    };
    let counts = [dims.n_u, dims.n_y, dims.y_len() * dims.z_len(), dims.y_len() * dims.u_len()];
    let body = &bytes[56..];
    if body.len() != 8 * counts.iter().sum::<usize>() {
        return Err(bad("length does not match the dimensions"));
    }
    let mut vals = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let mut take = |n: usize| -> Vec<f64> { vals.by_ref().take(n).collect() };
    let mu = take(counts[0]);
    let my = take(counts[1]);
    let z = Matrix::from_row_major(dims.y_len(), dims.z_len(), take(counts[2])).in_module("predictors")?;
    let u = Matrix::from_row_major(dims.y_len(), dims.u_len(), take(counts[3])).in_module("predictors")?;
    LinearPredictor::new(kind, dims, z, u, ScalingPair { mu, my }).in_module("predictors")
}

pub fn save_predictor(path: &Path, p: &LinearPredictor) -> Result<()> {
    fs::write(path, predictor_to_bytes(p)).map_err(|e| LabError::io(path, e))
}

pub fn load_predictor(path: &Path) -> Result<LinearPredictor> {
    predictor_from_bytes(&fs::read(path).map_err(|e| LabError::io(path, e))?)
}

fn push_matrix(t: &mut Table, name: &str, m: &Matrix) {
    for i in 0..m.rows() {
        for (j, v) in m.row(i).iter().enumerate() {
            t.push(vec![Cell::from(name), Cell::from(i), Cell::from(j), Cell::Num(*v)]);
        }
    }
}

fn push_vector(t: &mut Table, name: &str, v: &[f64]) {
    for (i, x) in v.iter().enumerate() {
        t.push(vec![Cell::from(name), Cell::from(i), Cell::from(0usize), Cell::Num(*x)]);
    }
}

/// Long-format CSV form of a predictor bundle: `block,row,col,value`.
pub fn predictor_table(p: &LinearPredictor) -> Table {
    let d = &p.dims;
    let mut t = Table::new(["block", "row", "col", "value"]);
    let header = [kind_code(p.kind) as usize, d.n, d.n_u, d.n_y, d.t_ini, d.horizon];
    for (i, v) in header.iter().enumerate() {
        t.push(vec![Cell::from("header"), Cell::from(i), Cell::from(0usize), Cell::Num(*v as f64)]);
    }
    push_vector(&mut t, "mu", &p.scaling.mu);
    push_vector(&mut t, "my", &p.scaling.my);
    push_matrix(&mut t, "z_map", &p.z_map);
    push_matrix(&mut t, "u_map", &p.u_map);
    t
}

fn block(t: &Table, name: &str) -> Result<Vec<f64>> {
    let names = t.text_column("block")?;
    let vals = t.column("value")?;
    Ok(names.iter().zip(vals).filter(|(n, _)| n.as_str() == name).map(|(_, v)| v).collect())
}

pub fn predictor_from_table(t: &Table) -> Result<LinearPredictor> {
    let h = block(t, "header")?;
    if h.len() != 6 {
        return Err(LabError::Data("predictor bundle: header needs 6 entries".into()));
    }
    let dims = PredictorDims {
        n: h[1] as usize,
        n_u: h[2] as usize,
        n_y: h[3] as usize,
        t_ini: h[4] as usize,
        horizon: h[5] as usize,
    };
    let z = Matrix::from_row_major(dims.y_len(), dims.z_len(), block(t, "z_map")?).in_module("predictors")?;
    let u = Matrix::from_row_major(dims.y_len(), dims.u_len(), block(t, "u_map")?).in_module("predictors")?;
    let scaling = ScalingPair { mu: block(t, "mu")?, my: block(t, "my")? };
    LinearPredictor::new(kind_from_code(h[0] as u64)?, dims, z, u, scaling).in_module("predictors")
}

/// Normalized QP `min ½xᵀPx + qᵀx, l ≤ Ax ≤ u` as `block,row,col,value`;
/// `scale` is the factor the tracking cost was divided by.
pub fn qp_dump_table(qp: &DenseQp, scale: f64) -> Table {
    let mut t = Table::new(["block", "row", "col", "value"]);
    push_vector(&mut t, "scale", &[scale]);
    push_matrix(&mut t, "hessian", &qp.p);
    push_vector(&mut t, "gradient", &qp.q);
    push_matrix(&mut t, "constraints", &qp.a);
    push_vector(&mut t, "lower", &qp.l);
    push_vector(&mut t, "upper", &qp.u);
    t
}

/// True when all tables share one header.
pub fn same_schema(tables: &[Table]) -> bool {
    tables.windows(2).all(|w| w[0].headers == w[1].headers)
}
