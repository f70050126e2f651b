use std::path::PathBuf;

use bertrand::energy::defaults;
use bertrand::harness::{load_scenario, run_sweep, ScenarioFile};
use bertrand::{DeviceId, DeviceParams, Scenario, SolverConfig, SystemParams};

fn bundled(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

#[test]
fn reference_constants() {
    let sys = SystemParams::default();
    assert_eq!(sys.slot_length, 0.2);
    assert_eq!(sys.bandwidth, 1.0);
    assert_eq!(sys.noise_power, 1e-9);
    assert_eq!(sys.max_tx_power, 0.1);
    assert_eq!(sys.pathloss_constant, 0.001);
    assert_eq!(sys.pathloss_exponent, 3.0);
    assert_eq!(sys.substitutability, 0.5);
    let du = DeviceParams::du(Default::default(), defaults::DU_WORKLOAD);
    let su = DeviceParams::su(1, Default::default(), 0.0);
    for dev in [&du, &su] {
        assert_eq!(dev.kappa, 1e-28);
        assert_eq!(dev.cycles_per_mb, 8e8);
    }
    assert_eq!(du.f_max, 2.4e9);
    assert_eq!(su.f_max, 1.5e9);
    assert_eq!(su.p_rec, 0.01);
    assert_eq!(du.workload, 0.6);
}

#[test]
fn bundled_two_su_file_is_the_reference_layout() {
    let (scenario, file) = load_scenario(&bundled("two_su.toml"), &[]).unwrap();
    assert_eq!(scenario, Scenario::two_su_reference());
    assert_eq!(file.solver_config().unwrap(), SolverConfig::default());
}

#[test]
fn bundled_sweep_matches_the_three_su_layout() {
    let (scenario, file) = load_scenario(&bundled("three_su_sweep.toml"), &[]).unwrap();
    assert_eq!(scenario, Scenario::three_su_reference(0.0));
    let points = file.sweep_points().unwrap();
    let values: Vec<f64> = points.iter().map(|p| p.0).collect();
    assert_eq!(values, [0.0, 0.05, 0.1, 0.15]);
    for (l3, f) in &points {
        assert_eq!(f.scenario().unwrap(), Scenario::three_su_reference(*l3));
    }
    let sweep = run_sweep(&file).unwrap();
    assert_eq!(sweep.table.rows.len(), 4);
    assert!(sweep.points.iter().all(|p| p.outcome.active_set.len() == 3));
}

#[test]
fn overrides_reach_every_section() {
    let overrides: Vec<String> = [
        "v=0.25",
        "su.2.workload=0.05",
        "solver.mode=\"icig\"",
        "du.workload=0.5",
    ]
    .map(String::from)
    .to_vec();
    let (scenario, file) = load_scenario(&bundled("two_su.toml"), &overrides).unwrap();
    assert_eq!(scenario.system.substitutability, 0.25);
    assert_eq!(scenario.sus[1].workload, 0.05);
    assert_eq!(scenario.sus[1].id, DeviceId::Su(2));
    assert_eq!(scenario.du.workload, 0.5);
    assert_eq!(file.solver_config().unwrap().mode.name(), "icig");
}

#[test]
fn normalized_text_round_trips() {
    let (_, file) = load_scenario(&bundled("three_su_sweep.toml"), &[]).unwrap();
    let text = file.to_toml().unwrap();
    assert_eq!(ScenarioFile::parse(&text).unwrap(), file);
}

#[test]
fn missing_file_names_the_path() {
    let err = load_scenario(&bundled("absent.toml"), &[]).unwrap_err();
    assert!(err.to_string().contains("absent.toml"), "{err}");
}
