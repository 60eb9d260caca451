mod common;

use common::*;
use ntdpc_core::qp::{
    kkt_residual, solve_tracking_qp, BoxBounds, QpSettings, QpStatus, TrackingQp, TrackingSolver,
};
use ntdpc_core::Matrix;
use proptest::prelude::*;

fn instance(i: u64) -> TrackingQp {
    let nu = 1 + (i % 3) as usize;
    let ny = 1 + ((i / 3) % 3) as usize;
    random_tracking_qp(nu, ny, i.is_multiple_of(2), 7000 + i)
}

fn check_against_oracle(qp: &TrackingQp, settings: QpSettings, label: &str) {
    let sol = TrackingSolver::new(qp, settings).unwrap().solve(qp).unwrap();
    match enumerate_tracking_qp(qp) {
        Some((_, best)) => {
            assert_eq!(sol.status, QpStatus::Solved, "{label}: status {:?}", sol.status);
            let err = (sol.objective - best).abs() / best.abs().max(1.0);
            assert!(err <= 1e-6, "{label}: objective {} vs oracle {best}", sol.objective);
            assert!(sol.kkt_residual <= 1e-6, "{label}: kkt {:e}", sol.kkt_residual);
            assert!(qp.u_box.contains(&sol.u_n, 1e-8), "{label}: input box");
            assert!(qp.y_box.contains(&sol.y_hat, 1e-8), "{label}: output box");
        }
        None => assert_eq!(sol.status, QpStatus::Infeasible, "{label}"),
    }
}

#[test]
fn matches_enumeration_oracle() {
    for i in 0..50 {
        check_against_oracle(&instance(i), QpSettings::default(), &format!("instance {i}"));
    }
}

#[test]
fn splitting_iteration_alone_matches_oracle() {
    let settings = QpSettings { fallback_after: usize::MAX, ..QpSettings::default() };
    for i in 0..50 {
        check_against_oracle(&instance(i), settings, &format!("instance {i}"));
    }
}

#[test]
fn dual_active_set_alone_matches_oracle() {
    let settings = QpSettings { fallback_after: 1, ..QpSettings::default() };
    for i in 0..50 {
        check_against_oracle(&instance(i), settings, &format!("instance {i}"));
    }
}

fn scalar(u_box: BoxBounds) -> TrackingQp {
    TrackingQp {
        p1: Matrix::zeros(1, 1),
        p2: Matrix::from_diag(&[2.0]),
        z_ini: vec![0.0],
        r_y: vec![1.0],
        r_u: vec![0.0],
        q: Matrix::identity(1),
        r: Matrix::zeros(1, 1),
        lambda: Matrix::identity(1),
        u_box,
        y_box: BoxBounds::unbounded(1),
        use_slack: false,
    }
}

#[test]
fn scalar_examples() {
    let s = solve_tracking_qp(&scalar(BoxBounds::unbounded(1))).unwrap();
    assert!((s.u_n[0] - 0.5).abs() < 1e-9 && (s.y_hat[0] - 1.0).abs() < 1e-9);
    assert!(s.kkt_residual <= 1e-12);
    let boxed = scalar(BoxBounds::new(vec![-0.2], vec![0.2]).unwrap());
    let s = solve_tracking_qp(&boxed).unwrap();
    assert!((s.u_n[0] - 0.2).abs() < 1e-9 && (s.y_hat[0] - 0.4).abs() < 1e-9);
    let (_, best) = enumerate_tracking_qp(&boxed).unwrap();
    assert!((s.objective - best).abs() < 1e-12);
}

#[test]
fn equilibrium_gives_zero_slack_and_zero_cost() {
    let mut qp = random_tracking_qp(4, 4, true, 11);
    qp.u_box = BoxBounds::repeat(&[-5.0], &[5.0], 4).unwrap();
    qp.y_box = BoxBounds::repeat(&[-50.0], &[50.0], 4).unwrap();
    // choose r_y so that (r_u, r_y) satisfies the predictor equality exactly
    let c = qp.p1.mul_vec(&qp.z_ini);
    qp.r_y = qp.p2.mul_vec(&qp.r_u).iter().zip(&c).map(|(a, b)| a + b).collect();
    let s = solve_tracking_qp(&qp).unwrap();
    assert_eq!(s.status, QpStatus::Solved);
    assert!(s.sigma_y.iter().all(|v| v.abs() <= 1e-6));
    assert!(s.u_n.iter().zip(&qp.r_u).all(|(a, b)| (a - b).abs() <= 1e-6));
    assert!(s.objective <= 1e-10);
}

#[test]
fn infeasible_output_box_is_reported() {
    let mut qp = scalar(BoxBounds::new(vec![-0.2], vec![0.2]).unwrap());
    qp.y_box = BoxBounds::new(vec![1.0], vec![2.0]).unwrap();
    assert_eq!(solve_tracking_qp(&qp).unwrap().status, QpStatus::Infeasible);
    let inverted = scalar(BoxBounds::new(vec![1.0], vec![0.0]).unwrap());
    assert!(!inverted.u_box.is_ordered());
    assert_eq!(solve_tracking_qp(&inverted).unwrap().status, QpStatus::Infeasible);
}

#[test]
fn perturbed_optimum_is_detected() {
    let qp = scalar(BoxBounds::unbounded(1));
    let mut s = solve_tracking_qp(&qp).unwrap();
    assert!(kkt_residual(&qp, &s) <= 1e-12);
    s.x[0] += 1e-3;
    assert!(kkt_residual(&qp, &s) >= 1e-4);
    let qp = random_tracking_qp(3, 3, true, 5);
    let mut s = solve_tracking_qp(&qp).unwrap();
    let free = (0..3).find(|&i| (s.u_n[i] - qp.u_box.lo[i]).abs() > 1e-3 && (qp.u_box.hi[i] - s.u_n[i]).abs() > 1e-3).unwrap();
    s.x[free] += 1e-3;
    assert!(kkt_residual(&qp, &s) >= 1e-4, "{:e}", kkt_residual(&qp, &s));
}

#[test]
fn warm_started_sequence_matches_cold_solves() {
    let base = random_tracking_qp(6, 6, true, 21);
    let mut solver = TrackingSolver::new(&base, QpSettings::default()).unwrap().with_blocks(2, 2);
    for k in 0..10u64 {
        let mut qp = base.clone();
        qp.z_ini = rand_vec(3, 900 + k);
        let warm = solver.solve(&qp).unwrap();
        let cold = solve_tracking_qp(&qp).unwrap();
        assert_eq!(warm.status, QpStatus::Solved);
        assert!((warm.objective - cold.objective).abs() <= 1e-7 * cold.objective.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn joint_weight_scaling(seed in 0u64..10_000, c in 0.01f64..100.0, slack in any::<bool>()) {
        let qp = random_tracking_qp(3, 3, slack, seed);
        let mut scaled = qp.clone();
        scaled.q = qp.q.scale(c);
        scaled.r = qp.r.scale(c);
        scaled.lambda = qp.lambda.scale(c);
        let a = solve_tracking_qp(&qp).unwrap();
        let b = solve_tracking_qp(&scaled).unwrap();
        prop_assert_eq!(a.status, b.status);
        if a.status == QpStatus::Solved {
            prop_assert!((b.objective - c * a.objective).abs() <= 1e-7 * (c * a.objective).max(1.0));
            for (x, y) in a.u_n.iter().zip(&b.u_n) {
                prop_assert!((x - y).abs() <= 1e-8 * x.abs().max(1.0), "{} vs {}", x, y);
            }
        }
    }

    #[test]
    fn solutions_respect_boxes_and_stationarity(seed in 0u64..10_000, slack in any::<bool>()) {
        let qp = random_tracking_qp(4, 2, slack, seed);
        let s = solve_tracking_qp(&qp).unwrap();
        if s.status == QpStatus::Solved {
            prop_assert!(s.kkt_residual <= 1e-6);
            prop_assert!(qp.u_box.contains(&s.u_n, 1e-8));
        }
    }
}
