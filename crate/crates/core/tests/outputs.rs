use std::fs;

use ddpx_core::config::{parse_config, RunConfig};
use ddpx_core::output::{num, Report};
use ddpx_core::pipeline::execute;
use ddpx_core::Error;
use tempfile::TempDir;

fn run(doc: &str) -> (TempDir, Report) {
    let dir = TempDir::new().unwrap();
    let cfg = parse_config(doc).unwrap();
    let report = execute(&cfg, dir.path()).unwrap();
    (dir, report)
}

#[test]
fn zero_run_snapshots_sit_at_epsilon() {
    let (dir, report) =
        run(r#"{"mode": "solve", "m": 1, "p": "constant:2", "u0": "zero", "grid": "0,1,21", "T": 0.1, "epsilon": 0.1}"#);
    assert!(report.passed);
    let text = fs::read_to_string(dir.path().join("snapshots.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("time,node_index,x,u,v"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 201 * 21);
    assert!(rows.iter().all(|r| r[3] == num(0.1)));
    // Time-major, node-minor.
    assert_eq!(rows[20][1], "20");
    assert_eq!(rows[21][1], "0");
    assert!(rows[21][0].parse::<f64>().unwrap() > 0.0);
    let diag = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    assert_eq!(diag.lines().next(), Some("time,energy,dissipation,min_u,max_u,picard_iters"));
    assert_eq!(diag.lines().count(), 202);
}

#[test]
fn report_echo_reparses() {
    let (dir, _) = run(
        r#"{"mode": "solve", "m": 2, "p": "linear:1.5,2.5", "u0": "bump:0.5,0.4,1", "grid": [0, 1, 41], "T": 0.01, "epsilon": 0.01}"#,
    );
    let report: Report = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let echo = serde_json::to_string(&report.config).unwrap();
    let again: RunConfig = parse_config(&echo).unwrap();
    assert_eq!(again, report.config);
    assert_eq!(report.version, env!("CARGO_PKG_VERSION"));
    assert!(report.checks.iter().all(|c| c.ok));
}

#[test]
fn continuation_writes_every_level() {
    let (dir, report) =
        run(r#"{"mode": "continuation", "m": 1, "p": "constant:2", "u0": "bump:0.5,0.4,1", "grid": "0,1,41", "T": 0.01}"#);
    assert!(report.passed, "{:?}", report.failed().collect::<Vec<_>>());
    for k in 0..4 {
        assert!(dir.path().join(format!("eps{k}_snapshots.csv")).is_file());
        assert!(dir.path().join(format!("eps{k}_diagnostics.csv")).is_file());
    }
    let limit = fs::read_to_string(dir.path().join("limit.csv")).unwrap();
    assert_eq!(limit.lines().next(), Some("time,node_index,x,u_limit"));
    let gaps = report.details["cauchy_gaps"].as_array().unwrap();
    assert_eq!(gaps.len(), 3);
}

#[test]
fn lemma_report_has_no_violations() {
    let (dir, report) = run(r#"{"mode": "verify-lemmas", "samples": 3000, "seed": 9}"#);
    assert!(report.passed);
    let text = fs::read_to_string(dir.path().join("report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for c in v["details"]["checks"].as_array().unwrap() {
        assert_eq!(c["violations"], 0);
        assert!(c["samples"].as_u64().unwrap() > 0);
    }
    assert_eq!(v["details"]["seed"], 9);
}

#[test]
fn io_errors_name_the_path() {
    let dir = TempDir::new().unwrap();
    let blocker = dir.path().join("occupied");
    fs::write(&blocker, "x").unwrap();
    let cfg = parse_config(r#"{"mode": "verify-lemmas", "samples": 10}"#).unwrap();
    match execute(&cfg, &blocker) {
        Err(Error::Io { path, .. }) => assert!(path.contains("occupied")),
        other => panic!("expected an I/O error, got {other:?}"),
    }
}

#[test]
fn barenblatt_profile_only() {
    let (dir, report) =
        run(r#"{"mode": "barenblatt", "m": 0.5, "u0": "barenblatt:1", "grid": "-4,4,101", "times": [0, 1]}"#);
    assert!(report.passed);
    let csv = fs::read_to_string(dir.path().join("barenblatt.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 101);
    assert!(!dir.path().join("snapshots.csv").exists());
}
