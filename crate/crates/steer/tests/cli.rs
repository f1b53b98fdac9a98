use std::path::Path;
use std::process::Command;

use serde_json::{json, Value};
use steer::report::{read_control, read_report};
use steer::run::{certify_transfer, run_transfer, CONTROL_FILE, REPORT_FILE, TRAJECTORY_FILE};
use steer::{CliError, RunConfig};
use steer_core::system::simulate;
use steer_core::DVector;

fn double_integrator(method: &str) -> Value {
    json!({"model": "double_integrator", "t0": 0.0, "T": 1.0, "x0": [0.0, 0.0], "x1": [1.0, 0.0], "method": method})
}

fn write_config(dir: &Path, value: &Value) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn steer_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_steer"))
}

#[test]
fn double_integrator_run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig::from_value(double_integrator("min_energy")).unwrap();
    let out = run_transfer(&config, dir.path()).unwrap();
    assert!(out.synthesis.terminal_error <= 1e-8);
    assert!((out.synthesis.energy - 6.0).abs() <= 1e-6);
    for f in [REPORT_FILE, CONTROL_FILE, TRAJECTORY_FILE] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let control = std::fs::read_to_string(dir.path().join(CONTROL_FILE)).unwrap();
    assert!(control.starts_with("t,u1\n"));
    assert_eq!(control.lines().count(), 402);
    let traj = std::fs::read_to_string(dir.path().join(TRAJECTORY_FILE)).unwrap();
    assert!(traj.starts_with("t,x1,x2\n"));
}

#[test]
fn report_round_trips_config_and_control() {
    let dir = tempfile::tempdir().unwrap();
    let value = json!({
        "model": "pendulum", "params": {"ell1": 1.5}, "t0": 0.1, "T": 2.1, "grid_n": 201, "anchor": "t0",
        "x0": [0.3, 0.0], "x1": [0.0, 0.0], "method": "min_energy", "tol": 1e-10
    });
    let config = RunConfig::from_value(value).unwrap();
    let out = run_transfer(&config, dir.path()).unwrap();
    let back = read_report(&dir.path().join(REPORT_FILE)).unwrap();
    assert_eq!(back.config, config);

    let u = read_control(&dir.path().join(CONTROL_FILE)).unwrap();
    assert_eq!(u.values(), out.synthesis.control.values());
    let model = steer::models::Model::build(&config.model, &config.params).unwrap();
    let traj = simulate(model.system(), &u, &DVector::from_vec(config.x0.clone())).unwrap();
    let err = (traj.endpoint() - DVector::from_vec(config.x1.clone())).norm();
    assert!(err <= 2.0 * out.synthesis.terminal_error.max(f64::MIN_POSITIVE));
}

#[test]
fn runs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let config = RunConfig::from_value(json!({
        "model": "unicycle", "t0": 0.0, "T": 1.0, "grid_n": 101, "x0": [0.0, 0.0, 0.0],
        "x1": [1.0, 0.5, 1.0], "method": "gramian", "init": [1.0, 1.0]
    }))
    .unwrap();
    run_transfer(&config, a.path()).unwrap();
    run_transfer(&config, b.path()).unwrap();
    let read = |d: &Path| std::fs::read(d.join(CONTROL_FILE)).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn unicycle_without_turning_is_a_coercivity_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig::from_value(json!({
        "model": "unicycle", "t0": 0.0, "T": 1.0, "grid_n": 51, "x0": [0.0, 0.0, 0.0],
        "x1": [1.0, 1.0, 0.0], "method": "min_energy", "init": [1.0, 0.0]
    }))
    .unwrap();
    let err = run_transfer(&config, dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 4, "{err}");
    let report = read_report(&dir.path().join(REPORT_FILE)).unwrap();
    assert_eq!(report.status, "failed");
    assert_eq!(report.exit_code, 4);
}

#[test]
fn non_convergence_still_writes_history() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig::from_value(json!({
        "model": "pendulum", "t0": 0.0, "T": 2.0, "grid_n": 101, "x0": [0.0, 0.0],
        "x1": [1.0, 0.0], "method": "min_energy", "max_iter": 2
    }))
    .unwrap();
    let out = run_transfer(&config, dir.path()).unwrap();
    assert_eq!(out.report.exit_code, 3);
    let report = read_report(&dir.path().join(REPORT_FILE)).unwrap();
    assert_eq!(report.status, "not_converged");
    assert_eq!(report.result.unwrap().residuals.len(), 2);
    assert!(dir.path().join(CONTROL_FILE).exists());
}

#[test]
fn flat_output_baseline_records_endpoint_speed() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig::from_value(json!({
        "model": "unicycle", "t0": 0.0, "T": 2.0, "x0": [0.0, 0.0, 0.0], "x1": [1.0, 0.0, 0.0], "method": "fl"
    }))
    .unwrap();
    let out = run_transfer(&config, dir.path()).unwrap();
    assert!(out.synthesis.terminal_error < 1e-8);
    assert!(out.report.result.unwrap().notes.iter().any(|n| n.contains("endpoint speed 0.5")));
}

#[test]
fn certify_writes_certificates() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig::from_value(json!({
        "model": "pendulum", "t0": 0.0, "T": 2.0, "grid_n": 101, "x0": [0.0, 0.0], "x1": [0.5, 0.0],
        "method": "gramian", "box": {"lower": [-1.0, -1.0], "upper": [1.0, 1.0], "n_t": 41, "n_x": 5}
    }))
    .unwrap();
    let file = certify_transfer(&config, dir.path()).unwrap();
    let kinds: Vec<&str> = file.certificates.iter().map(|c| c.kind.as_str()).collect();
    assert_eq!(kinds, ["bracket", "stm_bound"]);
    assert!(file.certificates.iter().all(|c| c.passed));
    assert!(dir.path().join("certificate.json").exists());
}

#[test]
fn schema_errors_name_the_key() {
    let mut v = double_integrator("min_energy");
    v.as_object_mut().unwrap().remove("x1");
    match RunConfig::from_value(v) {
        Err(CliError::Schema { key, .. }) => assert_eq!(key, "x1"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write_config(dir.path(), &double_integrator("gramian"));
    let status = steer_bin().args(["run", "--config"]).arg(&ok).arg("--out").arg(dir.path().join("ok")).status().unwrap();
    assert_eq!(status.code(), Some(0));

    let mut missing = double_integrator("min_energy");
    missing.as_object_mut().unwrap().remove("x1");
    let bad = write_config(dir.path(), &missing);
    let output = steer_bin().args(["run", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("x1"));

    let even = write_config(dir.path(), &double_integrator("min_energy"));
    let status = steer_bin().args(["run", "--grid-n", "400", "--config"]).arg(&even).status().unwrap();
    assert_eq!(status.code(), Some(2));

    let stuck = write_config(
        dir.path(),
        &json!({"model": "unicycle", "t0": 0.0, "T": 1.0, "grid_n": 51, "x0": [0.0, 0.0, 0.0], "x1": [1.0, 1.0, 0.0], "method": "gramian"}),
    );
    let status = steer_bin().args(["run", "--config"]).arg(&stuck).arg("--out").arg(dir.path().join("stuck")).status().unwrap();
    assert_eq!(status.code(), Some(4));

    let slow = write_config(
        dir.path(),
        &json!({"model": "pendulum", "t0": 0.0, "T": 2.0, "grid_n": 51, "x0": [0.0, 0.0], "x1": [1.0, 0.0], "method": "min_energy", "max_iter": 1}),
    );
    let status = steer_bin().args(["run", "--config"]).arg(&slow).arg("--out").arg(dir.path().join("slow")).status().unwrap();
    assert_eq!(status.code(), Some(3));

    let wild = write_config(
        dir.path(),
        &json!({"model": "pendulum", "params": {"g": 1e300}, "t0": 0.0, "T": 2.0, "grid_n": 11, "x0": [3.0, 1e200], "x1": [1.0, 0.0], "method": "fl"}),
    );
    let status = steer_bin().args(["run", "--config"]).arg(&wild).arg("--out").arg(dir.path().join("wild")).status().unwrap();
    assert_eq!(status.code(), Some(5));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for name in ["double_integrator.json", "pendulum.json", "unicycle.json"] {
        RunConfig::from_path(&dir.join(name)).unwrap();
    }
    let suite = steer::bench::Suite::from_path(&dir.join("bench.json")).unwrap();
    assert_eq!(suite.jobs(None, None).unwrap().len(), 18);
}
