use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hiv-latency"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("HIV_LATENCY_OUT")
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn analyze_reports_reproduction_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["analyze"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let rep: Value = serde_json::from_slice(&out.stdout).unwrap();
    let r = &rep["reproduction"];
    let r0 = r["r0"].as_f64().unwrap();
    let rl = r["r_l"].as_f64().unwrap();
    let q = r["q"].as_f64().unwrap();
    assert!((r0 - 2.087).abs() < 2.087e-3);
    assert!((rl - 2.027).abs() < 2.027e-3);
    assert!((q - 0.9714).abs() < 1e-4);
    assert_eq!(rl, q * r0);
    assert_eq!(read_json(&dir.path().join("report.json")), rep);
}

#[test]
fn analyze_treated_and_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["analyze", "--set", "efficacy.pi=0.519"], dir.path());
    let rep: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((rep["reproduction"]["r0_treated"].as_f64().unwrap() - 1.003).abs() < 2e-3);
    assert!((rep["reproduction"]["r_l_treated"].as_f64().unwrap() - 0.974).abs() < 2e-3);

    let out = run(&["analyze", "--set", "params.p=0"], dir.path());
    let rep: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rep["reproduction"]["degenerate"], Value::Bool(true));
    assert_eq!(rep["reproduction"]["r0"], rep["reproduction"]["r_l"]);
}

#[test]
fn invalid_config_exits_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\n  \"params\": {\"d_T\": 0.01,}\n}\n").unwrap();
    let out = run(&["analyze", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json:2:"), "{err}");

    let out = run(&["analyze", "--set", "params.k=\"fast\""], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("params.k"));

    let out = run(&["analyze", "--set", "efficacy.pi=1.5"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_writes_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--preset", "latent"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,T,I,L,V"));
    assert_eq!(lines.clone().count(), 1000);
    let last: Vec<f64> = lines.last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(last[0], 600.0);

    let rep = read_json(&dir.path().join("report.json"));
    let star = &rep["equilibria"][1]["state"];
    for (i, key) in ["T", "I", "L", "V"].iter().enumerate() {
        let e = star[key].as_f64().unwrap();
        assert!((last[i + 1] / e - 1.0).abs() < 0.01, "{key}");
    }
    assert!(rep["simulation"]["accepted_steps"].as_u64().unwrap() > 0);
}

#[test]
fn simulate_three_component_has_no_latent_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--preset", "three-compartment", "--set", "output.samples=10"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,T,I,V\n"));
    assert_eq!(csv.lines().count(), 11);
}

#[test]
fn simulate_zero_horizon_and_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--set", "solver.t_max=0"], a.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(a.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv, "t,T,I,L,V\n0.0,400000.0,0.0,0.0,100000.0\n");

    run(&["simulate", "--set", "solver.t_max=50"], a.path());
    run(&["simulate", "--set", "solver.t_max=50"], b.path());
    let ca = std::fs::read(a.path().join("trajectory.csv")).unwrap();
    let cb = std::fs::read(b.path().join("trajectory.csv")).unwrap();
    assert_eq!(ca, cb);
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = run(&["simulate", "--set", "solver.t_max=1"], &blocker.join("sub"));
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn numeric_failure_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    // step ceiling below the underflow limit
    let out = run(
        &["simulate", "--set", "solver.h_max=1e-13", "--set", "solver.t_max=1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn threshold_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["threshold", "--metric", "P", "--n", "5", "--r", "2,0.6"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("threshold.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "r,epsilon,time_days");
    assert!(rows[1].ends_with(",inf"));
    let t: f64 = rows[2].rsplit(',').next().unwrap().parse().unwrap();
    assert!((t - 25.0).abs() <= 5.0);

    let out = run(&["threshold", "--metric", "Q", "--r"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("threshold.csv")).unwrap();
    assert_eq!(csv, "r,epsilon,time_days\n");

    let out = run(&["threshold", "--metric", "P", "--n", "1", "--r", "0.5,7", "--jobs", "1"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("threshold.csv")).unwrap();
    assert!(csv.starts_with("r,epsilon,time_days,error\n"));
    assert!(csv.lines().nth(2).unwrap().starts_with("7.0,,,"));
}

#[test]
fn threshold_range_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["threshold", "--metric", "P", "--n", "1", "--range", "0.1:0.5:0.1"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("threshold.csv")).unwrap();
    let rs: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(rs, ["0.1", "0.2", "0.3", "0.4", "0.5"]);
}

#[test]
fn lyapunov_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["lyapunov", "--which", "endemic", "--preset", "table1"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = read_json(&dir.path().join("lyapunov.json"));
    assert_eq!(v["verdict"], "pass");
    let csv = std::fs::read_to_string(dir.path().join("lyapunov.csv")).unwrap();
    assert!(csv.starts_with("t,U,dUdt_analytic,dUdt_fd\n"));

    let out = run(&["lyapunov", "--which", "non-infective", "--preset", "near-threshold"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(read_json(&dir.path().join("lyapunov.json"))["verdict"], "pass");

    let out = run(&["lyapunov", "--which", "endemic", "--preset", "near-threshold"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent"));
}

#[test]
fn presets_list_and_env_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hiv-latency"))
        .args(["presets", "list"])
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["table1", "init-default", "near-threshold"] {
        assert!(text.contains(name));
    }
    let out = Command::new(env!("CARGO_BIN_EXE_hiv-latency"))
        .args(["simulate", "--set", "solver.t_max=1"])
        .env("HIV_LATENCY_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("trajectory.csv").exists());
}
