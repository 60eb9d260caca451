mod common;

use common::*;
use ntdpc_core::hankel::{build_hankels, initial_window, required_samples, stack_past_future};
use ntdpc_core::linalg::{numerical_rank, singular_values};
use ntdpc_core::noise::{NoiseModel, STREAM_DATA_NOISE};
use ntdpc_core::plant::{simulate_lti, PlantModel};
use ntdpc_core::signal::{
    apply_scaling, compute_scaling, excitation_rank, generate_pe_input, ScaleDirection, ScalingPair, Signal, Trajectory,
};
use ntdpc_core::{Error, Matrix};
use proptest::prelude::*;

fn scalar(v: &[f64]) -> Signal {
    Signal::from_samples(1, v.to_vec()).unwrap()
}

#[test]
fn scalar_recursion_by_hand() {
    let p = PlantModel::new(Matrix::from_diag(&[0.5]), Matrix::from_diag(&[1.0]), Matrix::from_diag(&[1.0]), 1.0).unwrap();
    let t = simulate_lti(&p, &[0.0], &scalar(&[1.0, 0.0, 0.0]), None).unwrap();
    assert_eq!(t.y_clean.unwrap().as_slice(), &[0.0, 1.0, 0.5]);
}

#[test]
fn zero_input_stays_at_equilibrium() {
    let p = PlantModel::boeing747();
    let t = simulate_lti(&p, &[0.0; 4], &Signal::zeros(2, 50), None).unwrap();
    assert!(t.y.as_slice().iter().all(|v| *v == 0.0));
}

#[test]
fn boeing_step_matches_hand_written_recursion() {
    let p = PlantModel::boeing747();
    let a = [
        [0.9997, 0.0038, -0.0001, -0.0322],
        [-0.0056, 0.9648, 0.7446, 0.0001],
        [0.0020, -0.0097, 0.9543, -0.0000],
        [0.0001, -0.0005, 0.0978, 1.0000],
    ];
    let b = [[0.0010, 0.1000], [-0.0615, 0.0183], [-0.1133, 0.0586], [-0.0057, 0.0029]];
    let c = [[1.0, 0.0, 0.0, 0.0], [0.0, -1.0, 0.0, 7.74]];
    let mut u = Signal::new(2);
    for _ in 0..10 {
        u.push(&[1.0, 0.0]);
    }
    let traj = simulate_lti(&p, &[0.0; 4], &u, None).unwrap();
    let mut x = [0.0f64; 4];
    for k in 0..10 {
        for i in 0..2 {
            let yi: f64 = (0..4).map(|j| c[i][j] * x[j]).sum();
            assert!((traj.y.sample(k)[i] - yi).abs() <= 1e-12, "k={k} i={i}");
        }
        let mut nx = [0.0; 4];
        for i in 0..4 {
            nx[i] = (0..4).map(|j| a[i][j] * x[j]).sum::<f64>() + b[i][0];
        }
        x = nx;
    }
}

#[test]
fn boeing_plant_is_minimal() {
    let p = PlantModel::boeing747();
    assert!(p.is_controllable().unwrap());
    assert!(p.is_observable().unwrap());
}

#[test]
fn simulation_rejects_dimension_mismatch() {
    let p = PlantModel::boeing747();
    assert!(matches!(simulate_lti(&p, &[0.0; 3], &Signal::zeros(2, 4), None), Err(Error::Dimension { .. })));
    assert!(matches!(simulate_lti(&p, &[0.0; 4], &Signal::zeros(1, 4), None), Err(Error::Dimension { .. })));
}

#[test]
fn noisy_simulation_is_deterministic_and_additive() {
    let p = PlantModel::boeing747();
    let u = generate_pe_input(2, 200, 1.0, 5).unwrap();
    let nm = NoiseModel::isotropic(2, 0.25, 9, STREAM_DATA_NOISE).unwrap();
    let a = simulate_lti(&p, &[0.1, 0.0, 0.0, 0.0], &u, Some(&nm)).unwrap();
    let b = simulate_lti(&p, &[0.1, 0.0, 0.0, 0.0], &u, Some(&nm)).unwrap();
    assert_eq!(a, b);
    let clean = a.y_clean.as_ref().unwrap();
    for k in 0..200 {
        let z = nm.sample(k as u64);
        for i in 0..2 {
            assert_eq!(a.y.sample(k)[i], clean.sample(k)[i] + z[i]);
        }
    }
    let other = simulate_lti(&p, &[0.1, 0.0, 0.0, 0.0], &u, Some(&nm.with_seed(10))).unwrap();
    assert_ne!(a.y, other.y);
}

#[test]
fn pe_input_is_deterministic_and_linear_in_amplitude() {
    let a = generate_pe_input(2, 300, 1.0, 42).unwrap();
    assert_eq!(a, generate_pe_input(2, 300, 1.0, 42).unwrap());
    let b = generate_pe_input(2, 300, 3.5, 42).unwrap();
    for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
        assert!((3.5 * x - y).abs() <= 1e-15 * y.abs().max(1.0));
        assert!(x.abs() <= 1.0);
    }
    assert!(generate_pe_input(2, 10, 0.0, 1).is_err());
}

#[test]
fn pe_input_has_order_forty_four() {
    let u = generate_pe_input(2, 2500 + 40, 1.0, 1).unwrap();
    assert_eq!(excitation_rank(&u, 44).unwrap(), 88);
}

#[test]
fn hankel_example() {
    let t = Trajectory::new(scalar(&[1., 2., 3., 4., 5., 6., 7.]), scalar(&[10., 20., 30., 40., 50., 60., 70.])).unwrap();
    let h = build_hankels(&t, 2, 2, 2).unwrap();
    let m = |r: [[f64; 2]; 2]| Matrix::from_rows(&r).unwrap();
    assert_eq!(h.up, m([[1., 2.], [2., 3.]]));
    assert_eq!(h.yp, m([[20., 30.], [30., 40.]]));
    assert_eq!(h.uf, m([[3., 4.], [4., 5.]]));
    assert_eq!(h.yf, m([[40., 50.], [50., 60.]]));
    let (zp, zf) = stack_past_future(&h);
    assert_eq!(zp, Matrix::from_rows(&[[1., 2.], [2., 3.], [20., 30.], [30., 40.]]).unwrap());
    assert_eq!(zf.rows(), 4);
}

#[test]
fn hankel_reports_required_samples() {
    let t = Trajectory::new(scalar(&[0.0; 6]), scalar(&[0.0; 6])).unwrap();
    match build_hankels(&t, 2, 2, 2) {
        Err(Error::InsufficientData { required, available }) => assert_eq!((required, available), (7, 6)),
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(required_samples(20, 20, 2500), 2541);
}

#[test]
fn boeing_hankel_dimensions_and_rank() {
    let d = boeing_data(20, 20, 2500, 0.0, 1);
    let (zp, zf) = stack_past_future(&d.hankel);
    assert_eq!(zp.shape(), (80, 2500));
    assert_eq!(zf.shape(), (80, 2500));
    assert_eq!(zp.slice_rows(0..40), d.hankel.up);
    let s = singular_values(&zp).unwrap();
    assert_eq!(numerical_rank(&s, 1e-8), 44);
}

#[test]
fn scaling_examples() {
    let u = scalar(&[1.0, -1.0, 1.0, -1.0]);
    let y = scalar(&[2.0, 4.0, 2.0, 4.0]);
    let t = Trajectory::new(u, y).unwrap();
    let s = compute_scaling(&t).unwrap();
    assert_eq!((s.mu[0], s.my[0]), (1.0, 3.0));
    let id = apply_scaling(&t, &ScalingPair::identity(1, 1), ScaleDirection::Forward).unwrap();
    assert_eq!(id, t);
    let two = ScalingPair { mu: vec![2.0], my: vec![1.0] };
    let f = apply_scaling(&Trajectory::new(scalar(&[2.0]), scalar(&[1.0])).unwrap(), &two, ScaleDirection::Forward).unwrap();
    assert_eq!(f.u.as_slice(), &[1.0]);
    let zero = Trajectory::new(scalar(&[0.0, 0.0]), scalar(&[1.0, 1.0])).unwrap();
    assert!(matches!(compute_scaling(&zero), Err(Error::ScaleUndefined { .. })));
}

#[test]
fn window_bookkeeping() {
    let u = scalar(&(0..30).map(|k| k as f64).collect::<Vec<_>>());
    let y = scalar(&(0..30).map(|k| 100.0 + k as f64).collect::<Vec<_>>());
    for k in 5..29 {
        let (ui, yi) = initial_window(&u, &y, k, 5).unwrap();
        assert_eq!(ui, (k - 5..k).map(|j| j as f64).collect::<Vec<_>>());
        assert_eq!(yi, (k - 4..=k).map(|j| 100.0 + j as f64).collect::<Vec<_>>());
    }
    assert!(initial_window(&u, &y, 4, 5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hankel_blocks_follow_the_indexing_rule(
        n_u in 1usize..3, n_y in 1usize..3, t_ini in 1usize..5, horizon in 1usize..5, cols in 1usize..12, seed in 0u64..1000,
    ) {
        let len = required_samples(t_ini, horizon, cols);
        let u = Signal::from_samples(n_u, rand_vec(n_u * len, seed)).unwrap();
        let y = Signal::from_samples(n_y, rand_vec(n_y * len, seed + 1)).unwrap();
        let h = build_hankels(&Trajectory::new(u.clone(), y.clone()).unwrap(), t_ini, horizon, cols).unwrap();
        prop_assert!(h.has_hankel_structure(0.0));
        for j in 0..cols {
            for t in 0..t_ini {
                for c in 0..n_u {
                    prop_assert_eq!(h.up[(t * n_u + c, j)], u.sample(j + t)[c]);
                }
                for c in 0..n_y {
                    prop_assert_eq!(h.yp[(t * n_y + c, j)], y.sample(j + t + 1)[c]);
                }
            }
            for t in 0..horizon {
                for c in 0..n_u {
                    prop_assert_eq!(h.uf[(t * n_u + c, j)], u.sample(j + t_ini + t)[c]);
                }
                for c in 0..n_y {
                    prop_assert_eq!(h.yf[(t * n_y + c, j)], y.sample(j + t_ini + t + 1)[c]);
                }
            }
        }
    }

    #[test]
    fn scaling_round_trip(seed in 0u64..10_000, len in 1usize..40) {
        let u = Signal::from_samples(2, rand_vec(2 * len, seed)).unwrap();
        let y = Signal::from_samples(3, rand_vec(3 * len, seed + 1).iter().map(|v| 50.0 * v).collect()).unwrap();
        let t = Trajectory::new(u, y).unwrap();
        let s = compute_scaling(&t).unwrap();
        prop_assert!(s.mu.iter().chain(&s.my).all(|v| *v > 0.0));
        let back = apply_scaling(&apply_scaling(&t, &s, ScaleDirection::Forward).unwrap(), &s, ScaleDirection::Inverse).unwrap();
        for (a, b) in back.u.as_slice().iter().zip(t.u.as_slice()).chain(back.y.as_slice().iter().zip(t.y.as_slice())) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }
}
