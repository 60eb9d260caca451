use ntdpc_core::control::Scenario;
use ntdpc_core::predict::PredictorKind;
use ntdpc_lab::{Config, LabError};

#[test]
fn preset_matrices_match_the_published_listing() {
    let plant = Config::from_toml("[plant]\npreset = \"boeing747\"\n").unwrap().plant().unwrap();
    assert_eq!(plant.a().row(0)[0], 0.9997);
    assert_eq!(plant.b().row(1)[0], -0.0615);
    assert_eq!(plant.c().row(1)[3], 7.74);
    let a = [
        [0.9997, 0.0038, -0.0001, -0.0322],
        [-0.0056, 0.9648, 0.7446, 0.0001],
        [0.0020, -0.0097, 0.9543, -0.0000],
        [0.0001, -0.0005, 0.0978, 1.0000],
    ];
    let b = [[0.0010, 0.1000], [-0.0615, 0.0183], [-0.1133, 0.0586], [-0.0057, 0.0029]];
    let c = [[1.0, 0.0, 0.0, 0.0], [0.0, -1.0, 0.0, 7.74]];
    for (i, r) in a.iter().enumerate() {
        assert_eq!(plant.a().row(i), r);
    }
    for (i, r) in b.iter().enumerate() {
        assert_eq!(plant.b().row(i), r);
    }
    for (i, r) in c.iter().enumerate() {
        assert_eq!(plant.c().row(i), r);
    }
}

#[test]
fn missing_noise_section_is_noise_free() {
    let cfg = Config::from_toml("[data]\ncolumns = 2500\n").unwrap();
    let s = cfg.scenario(PredictorKind::Spc).unwrap();
    assert!(s.noise_cov.as_slice().iter().all(|v| *v == 0.0));
    assert_eq!(s, Scenario::boeing747().with_controller(PredictorKind::Spc));
}

fn config_error(text: &str) -> String {
    match Config::from_toml(text) {
        Err(e @ LabError::Config(_)) => {
            assert_eq!(e.exit_code(), 2);
            e.to_string()
        }
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn malformed_numeric_names_the_key() {
    let msg = config_error("[data]\nt_ini = \"twenty\"\n");
    assert!(msg.contains("data.t_ini"), "{msg}");
    let msg = config_error("[noise]\nvariance = -1.0\n");
    assert!(msg.contains("noise.variance"), "{msg}");
    let msg = config_error("[control]\nr_y = [10.0]\n");
    assert!(msg.contains("control.r_y"), "{msg}");
}

#[test]
fn unknown_keys_are_rejected() {
    let msg = config_error("[data]\ncolums = 100\n");
    assert!(msg.contains("colums"), "{msg}");
    let msg = config_error("[nosie]\nvariance = 0.1\n");
    assert!(msg.contains("nosie"), "{msg}");
}

#[test]
fn scenario_invariants_are_config_errors() {
    let msg = config_error("[data]\nt_ini = 20\nhorizon = 10\n");
    assert!(msg.contains("T_ini"), "{msg}");
    let msg = config_error("[data]\ncolumns = 50\n");
    assert!(msg.contains("excitation"), "{msg}");
    let msg = config_error("[control]\ncontrollers = [\"mpc\"]\n");
    assert!(msg.contains("control.controllers"), "{msg}");
}

#[test]
fn explicit_matrices_and_weights() {
    let text = r#"
[plant]
a = [[0.5]]
b = [[1.0]]
c = [[1.0]]
order = 1
[data]
t_ini = 3
horizon = 3
columns = 40
[noise]
covariance = [[0.04]]
[control]
r_y = [1.0]
r_u = [0.5]
u_lo = [-2.0]
u_hi = [2.0]
y_lo = [-5.0]
y_hi = [5.0]
q = [[2.0]]
"#;
    let cfg = Config::from_toml(text).unwrap();
    let s = cfg.scenario(PredictorKind::Ntdpc).unwrap();
    assert_eq!(s.order, 1);
    assert_eq!(s.r_u, Some(vec![0.5]));
    assert_eq!(s.noise_cov.as_slice(), &[0.04]);
    assert_eq!(s.weights.q.as_slice(), &[2.0]);
    assert_eq!(Config::from_toml(&cfg.resolved_toml()).unwrap(), cfg);
}
