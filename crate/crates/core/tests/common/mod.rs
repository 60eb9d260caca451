#![allow(dead_code)]

use ntdpc_core::hankel::{build_hankels, required_samples, HankelSet};
use ntdpc_core::noise::{NoiseModel, STREAM_DATA_NOISE};
use ntdpc_core::plant::{simulate_lti, PlantModel};
use ntdpc_core::predict::PredictorDims;
use ntdpc_core::signal::{apply_scaling, compute_scaling, generate_pe_input, ScaleDirection, ScalingPair, Trajectory};
use ntdpc_core::Matrix;

pub struct Dataset {
    pub plant: PlantModel,
    pub raw: Trajectory,
    pub scaled: Trajectory,
    pub scaling: ScalingPair,
    pub hankel: HankelSet,
    pub dims: PredictorDims,
}

/// Boeing data set with input amplitude 20 and `sigma2 * I` output noise.
pub fn boeing_data(t_ini: usize, horizon: usize, columns: usize, sigma2: f64, seed: u64) -> Dataset {
    let plant = PlantModel::boeing747();
    let len = required_samples(t_ini, horizon, columns);
    let u = generate_pe_input(2, len, 20.0, seed).unwrap();
    let noise = NoiseModel::isotropic(2, sigma2, seed, STREAM_DATA_NOISE).unwrap();
    let raw = simulate_lti(&plant, &[0.0; 4], &u, Some(&noise)).unwrap();
    let scaling = compute_scaling(&raw).unwrap();
    let scaled = apply_scaling(&raw, &scaling, ScaleDirection::Forward).unwrap();
    let hankel = build_hankels(&scaled, t_ini, horizon, columns).unwrap();
    let dims = PredictorDims { n: 4, n_u: 2, n_y: 2, t_ini, horizon };
    Dataset { plant, raw, scaled, scaling, hankel, dims }
}

/// Scaled per-sample covariance `My⁻¹ (σ² I) My⁻¹`.
pub fn scaled_covariance(sigma2: f64, s: &ScalingPair) -> Matrix {
    Matrix::from_diag(&s.my.iter().map(|m| sigma2 / (m * m)).collect::<Vec<_>>())
}

pub struct Window {
    pub u_ini: Vec<f64>,
    pub y_ini: Vec<f64>,
    pub u_n: Vec<f64>,
    pub y_n: Vec<f64>,
}

/// Held-out window from a fresh noise-free trajectory, in scaled coordinates.
pub fn held_out_window(d: &Dataset, seed: u64) -> Window {
    let (t, n) = (d.dims.t_ini, d.dims.horizon);
    let len = 60 + t + n + 1;
    let u = generate_pe_input(2, len, 20.0, seed).unwrap();
    let x0 = [0.5, -0.2, 0.1, 0.3];
    let raw = simulate_lti(&d.plant, &x0, &u, None).unwrap();
    let s = apply_scaling(&raw, &d.scaling, ScaleDirection::Forward).unwrap();
    let k = 60 + t;
    Window {
        u_ini: s.u.window(k - t, t),
        y_ini: s.y.window(k + 1 - t, t),
        u_n: s.u.window(k, n),
        y_n: s.y.window(k + 1, n),
    }
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

/// Deterministic matrix with entries uniform in [-1, 1).
pub fn rand_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(rows, cols, |_, _| (rng.next_u64() >> 11) as f64 / (1u64 << 52) as f64 - 1.0)
}

pub fn rand_vec(len: usize, seed: u64) -> Vec<f64> {
    rand_matrix(len, 1, seed).into_vec()
}

/// Random symmetric positive definite matrix `B Bᵀ + c I`.
pub fn rand_spd(n: usize, seed: u64, c: f64) -> Matrix {
    let b = rand_matrix(n, n, seed);
    let mut s = b.matmul_t(&b);
    for i in 0..n {
        s[(i, i)] += c;
    }
    s
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    (a - b).max_abs()
}

/// Plain Gaussian elimination with partial pivoting, written independently
/// of the crate's LU for use as an oracle.
pub fn gauss_solve(a: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| {
        let mut r = a.row(i).to_vec();
        r.push(b[i]);
        r
    }).collect();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i][k].abs().partial_cmp(&m[j][k].abs()).unwrap()).unwrap();
        m.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..=n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    x
}

/// Per-component z-scores `|mean − target| / (std / √draws)` of the
/// predicted future output on a held-out window whose outputs carry fresh
/// `sigma2 * I` noise. The target is the plant's noise-free future output
/// when `against_plant`, otherwise the predictor's own clean-window prediction.
pub fn unbiasedness_z_scores(
    d: &Dataset,
    predictor: &dyn ntdpc_core::predict::Predictor,
    sigma2: f64,
    draws: usize,
    seed: u64,
    against_plant: bool,
) -> Vec<f64> {
    use ntdpc_core::noise::STREAM_LOOP_NOISE;
    let w = held_out_window(d, seed);
    let target = if against_plant {
        w.y_n.clone()
    } else {
        predictor.predict(&w.u_ini, &w.y_ini, &w.u_n).unwrap()
    };
    let noise = NoiseModel::isotropic(2, sigma2, seed, STREAM_LOOP_NOISE).unwrap();
    let t = d.dims.t_ini;
    let ny = d.dims.y_len();
    let mut sum = vec![0.0; ny];
    let mut sumsq = vec![0.0; ny];
    for j in 0..draws {
        let mut y_ini = w.y_ini.clone();
        for s in 0..t {
            let z = noise.sample((j * t + s) as u64);
            for c in 0..2 {
                y_ini[s * 2 + c] += z[c] / d.scaling.my[c];
            }
        }
        let y = predictor.predict(&w.u_ini, &y_ini, &w.u_n).unwrap();
        for i in 0..ny {
            sum[i] += y[i];
            sumsq[i] += y[i] * y[i];
        }
    }
    let n = draws as f64;
    (0..ny)
        .map(|i| {
            let mean = sum[i] / n;
            let var = (sumsq[i] / n - mean * mean) * n / (n - 1.0);
            (mean - target[i]).abs() / (var.max(0.0).sqrt() / n.sqrt()).max(1e-300)
        })
        .collect()
}

/// Small random tracking QP with `nu` inputs and `ny` outputs in the
/// stacked horizon; some box sides are left open.
pub fn random_tracking_qp(nu: usize, ny: usize, use_slack: bool, seed: u64) -> ntdpc_core::qp::TrackingQp {
    use ntdpc_core::qp::{BoxBounds, TrackingQp};
    let v = rand_vec(64, seed);
    let bound = |i: usize, open: f64| if v[i].abs() > open { f64::INFINITY } else { 0.3 + 1.5 * v[i + 1].abs() };
    let u_lo: Vec<f64> = (0..nu).map(|i| -bound(2 * i, 0.8)).collect();
    let u_hi: Vec<f64> = (0..nu).map(|i| bound(2 * i + 12, 0.8)).collect();
    let y_lo: Vec<f64> = (0..ny).map(|i| -bound(2 * i + 24, 0.6)).collect();
    let y_hi: Vec<f64> = (0..ny).map(|i| bound(2 * i + 36, 0.6)).collect();
    let r_diag: Vec<f64> = rand_vec(nu, seed + 1).iter().map(|x| 0.05 * (x + 1.0)).collect();
    TrackingQp {
        p1: rand_matrix(ny, 3, seed + 2),
        p2: rand_matrix(ny, nu, seed + 3).scale(2.0),
        z_ini: rand_vec(3, seed + 4),
        r_y: rand_vec(ny, seed + 5).iter().map(|x| 2.0 * x).collect(),
        r_u: rand_vec(nu, seed + 6),
        q: rand_spd(ny, seed + 7, 0.2),
        r: Matrix::from_diag(&r_diag),
        lambda: rand_spd(ny, seed + 8, 0.5).scale(20.0),
        u_box: BoxBounds::new(u_lo, u_hi).unwrap(),
        y_box: BoxBounds::new(y_lo, y_hi).unwrap(),
        use_slack,
    }
}

/// Brute-force optimum of a tracking QP: every assignment of each bounded
/// row to free / lower / upper is solved as an equality-constrained QP and
/// the best primal-feasible face minimizer is kept. Returns `None` when no
/// face minimizer is feasible (the problem is infeasible).
pub fn enumerate_tracking_qp(qp: &ntdpc_core::qp::TrackingQp) -> Option<(Vec<f64>, f64)> {
    let (nu, ny) = (qp.p2.cols(), qp.p2.rows());
    let c = qp.p1.mul_vec(&qp.z_ini);
    // objective as a sum of weighted residuals (E x − e)ᵀ W (E x − e)
    let n = if qp.use_slack { nu + ny } else { nu };
    let select = |rows: usize, off: usize| Matrix::from_fn(rows, n, |i, j| if j == off + i { 1.0 } else { 0.0 });
    let eu = select(nu, 0);
    let mut terms: Vec<(Matrix, Vec<f64>, &Matrix)> = vec![(eu.clone(), qp.r_u.clone(), &qp.r)];
    let (y_rows, y_off): (Matrix, Vec<f64>);
    if qp.use_slack {
        let ey = select(ny, nu);
        terms.push((ey.clone(), qp.r_y.clone(), &qp.q));
        let es = &ey - &qp.p2.matmul(&eu);
        terms.push((es, c.clone(), &qp.lambda));
        y_rows = ey;
        y_off = vec![0.0; ny];
    } else {
        let e: Vec<f64> = qp.r_y.iter().zip(&c).map(|(r, c)| r - c).collect();
        terms.push((qp.p2.clone(), e, &qp.q));
        y_rows = qp.p2.clone();
        y_off = c.clone();
    }
    let mut h = Matrix::zeros(n, n);
    let mut g = vec![0.0; n];
    let mut konst = 0.0;
    for (e, t, w) in &terms {
        h = &h + &e.t_matmul(&w.matmul(e)).scale(2.0);
        let wt = w.mul_vec(t);
        for (gi, v) in g.iter_mut().zip(e.t_mul_vec(&wt)) {
            *gi -= 2.0 * v;
        }
        konst += t.iter().zip(&wt).map(|(a, b)| a * b).sum::<f64>();
    }
    let cons = Matrix::vstack(&[&eu, &y_rows]);
    let mut lo = qp.u_box.lo.clone();
    lo.extend(qp.y_box.lo.iter().zip(&y_off).map(|(a, b)| a - b));
    let mut hi = qp.u_box.hi.clone();
    hi.extend(qp.y_box.hi.iter().zip(&y_off).map(|(a, b)| a - b));
    let rows: Vec<usize> = (0..cons.rows()).filter(|&i| lo[i].is_finite() || hi[i].is_finite()).collect();
    let f = |x: &[f64]| {
        let hx = h.mul_vec(x);
        0.5 * x.iter().zip(&hx).map(|(a, b)| a * b).sum::<f64>() + x.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>() + konst
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    let total = 3usize.pow(rows.len() as u32);
    for code in 0..total {
        let mut eq_rows = Vec::new();
        let mut eq_vals = Vec::new();
        let mut k = code;
        let mut valid = true;
        for &i in &rows {
            match k % 3 {
                1 if lo[i].is_finite() => {
                    eq_rows.push(i);
                    eq_vals.push(lo[i]);
                }
                2 if hi[i].is_finite() => {
                    eq_rows.push(i);
                    eq_vals.push(hi[i]);
                }
                0 => {}
                _ => valid = false,
            }
            k /= 3;
        }
        if !valid || eq_rows.len() > n {
            continue;
        }
        let p = eq_rows.len();
        let mut kkt = Matrix::zeros(n + p, n + p);
        kkt.set_block(0, 0, &h);
        for (r, &i) in eq_rows.iter().enumerate() {
            for j in 0..n {
                kkt[(n + r, j)] = cons[(i, j)];
                kkt[(j, n + r)] = cons[(i, j)];
            }
        }
        let mut rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        rhs.extend(&eq_vals);
        let sol = gauss_solve(&kkt, &rhs);
        if sol.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let x = &sol[..n];
        let cx = cons.mul_vec(x);
        let feasible = (0..cons.rows()).all(|i| cx[i] >= lo[i] - 1e-9 && cx[i] <= hi[i] + 1e-9);
        if !feasible {
            continue;
        }
        let fx = f(x);
        if best.as_ref().is_none_or(|(_, b)| fx < *b) {
            best = Some((x.to_vec(), fx));
        }
    }
    best
}
