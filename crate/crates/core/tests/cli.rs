use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn crsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crsim"))
        .args(args)
        .env_remove("CRSIM_LOG")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write_canonical(dir: &Path) -> String {
    let path = dir.join("canonical.json");
    std::fs::write(&path, crsim_core::sim::Scenario::canonical().to_json()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn simulate_happy_path() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_canonical(dir.path());
    let out = crsim(&["simulate", "--scenario", &scenario, "--seed", "42"]);
    let v = stdout_json(&out);
    assert_eq!(v["provenance"]["seed"], 42);
    assert_eq!(v["provenance"]["tool"], "crsim");
    assert_eq!(v["provenance"]["scenario_hash"].as_str().unwrap().len(), 64);
    assert_eq!(v["metrics"]["arrivals"], 10_000);
}

#[test]
fn seed_override_is_recorded_and_output_is_reproducible() {
    let a = crsim(&["simulate", "--preset", "canonical", "--seed", "7"]);
    let b = crsim(&["simulate", "--preset", "canonical", "--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
    let v = stdout_json(&a);
    assert_eq!(v["provenance"]["seed"], 7);
    assert_eq!(v["provenance"]["seed_overridden"], true);
    let plain = stdout_json(&crsim(&["simulate", "--preset", "canonical"]));
    assert_eq!(plain["provenance"]["seed_overridden"], false);
    assert_ne!(plain["trace"]["hash"], v["trace"]["hash"]);
}

#[test]
fn missing_scenario_exits_one_and_names_the_path() {
    let out = crsim(&["simulate", "--scenario", "missing.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));
    assert!(out.stdout.is_empty());
}

#[test]
fn schema_violations_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"bands": [], "sessions": [], "horizon": 10, "seed": 1}"#).unwrap();
    let out = crsim(&["simulate", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bands"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(crsim(&[]).status.code(), Some(2));
    assert_eq!(crsim(&["simulate"]).status.code(), Some(2));
    assert_eq!(crsim(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        crsim(&["simulate", "--preset", "canonical", "--scenario", "x.json"]).status.code(),
        Some(2)
    );
}

#[test]
fn compare_table_is_within_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_canonical(dir.path());
    let out = crsim(&["compare", "--scenario", &scenario]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().find(|l| l.starts_with("blocking")).expect("blocking row");
    let cols: Vec<f64> = row.split_whitespace().skip(1).map(|c| c.parse().unwrap()).collect();
    assert!((cols[0] - 4.0 / 9.0).abs() < 1e-6);
    assert!(cols[2] <= 0.02, "{row}");
}

#[test]
fn compare_names_violated_assumption() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = crsim_core::sim::Scenario::canonical();
    s.handover.latency = 5;
    let path = dir.path().join("latency.json");
    std::fs::write(&path, s.to_json()).unwrap();
    let out = crsim(&["compare", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-completion analytic assumes zero latency"));
}

#[test]
fn analyze_reports_canonical_figures() {
    let v = stdout_json(&crsim(&["analyze", "--preset", "canonical"]));
    let blocking = v["analysis"]["blocking"][0]["probability"].as_f64().unwrap();
    assert!((blocking - 4.0 / 9.0).abs() < 1e-12);
    let nc = v["analysis"]["noncompletion"][0]["probability"].as_f64().unwrap();
    assert!((nc - 0.211_393_554_119_158_58).abs() < 1e-12);
}

#[test]
fn out_file_trace_and_timeseries() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("metrics.json");
    let trace_path = dir.path().join("trace.ndjson");
    let out = crsim(&[
        "simulate",
        "--preset",
        "canonical",
        "--out",
        out_path.to_str().unwrap(),
        "--trace",
        trace_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let trace = std::fs::read_to_string(&trace_path).unwrap();
    assert_eq!(trace.lines().count() as u64, v["trace"]["events"].as_u64().unwrap());

    let ts = crsim(&["simulate", "--preset", "canonical", "--timeseries"]);
    assert!(ts.status.success());
    let csv = String::from_utf8(ts.stdout).unwrap();
    assert!(csv.starts_with("step,"));
}

#[test]
fn knowledge_base_in_and_out() {
    let dir = tempfile::tempdir().unwrap();
    let kb = dir.path().join("kb.json");
    let out = crsim(&["simulate", "--preset", "canonical", "--kb-out", kb.to_str().unwrap()]);
    assert!(out.status.success());
    let again = crsim(&["simulate", "--preset", "canonical", "--kb-in", kb.to_str().unwrap()]);
    assert!(again.status.success());

    std::fs::write(&kb, r#"{"0": {"attempts": 1, "grants": 2, "sensed": 0, "available": 0}}"#).unwrap();
    let bad = crsim(&["simulate", "--preset", "canonical", "--kb-in", kb.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn replications_report_mean_and_stddev() {
    let v = stdout_json(&crsim(&["simulate", "--preset", "canonical", "--replications", "4"]));
    assert_eq!(v["runs"].as_array().unwrap().len(), 4);
    let mean = v["mean"]["empirical_blocking"].as_f64().unwrap();
    assert!((mean - 4.0 / 9.0).abs() < 0.02);
    assert!(v["stddev"]["empirical_blocking"].as_f64().unwrap() > 0.0);
}

#[test]
fn qos_list_matches_checked_in_table() {
    let out = crsim(&["qos", "list"]);
    assert!(out.status.success());
    let expected = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/qos_table.csv")).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), expected);
}

#[test]
fn tdma_topology() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("line.json");
    std::fs::write(
        &path,
        r#"{"channels": 4, "nodes": [
            {"id": 0, "channels": [0, 1, 2]},
            {"id": 1, "channels": [1, 2, 3]},
            {"id": 2, "channels": [2, 3]}
        ], "edges": [[0, 1], [1, 2]]}"#,
    )
    .unwrap();
    let v = stdout_json(&crsim(&["tdma", "--topology", path.to_str().unwrap()]));
    assert_eq!(v["collisions"], 0);
    assert_eq!(v["global_common"], serde_json::json!([2]));
    for node in v["candidates"].as_array().unwrap() {
        assert_eq!(node, &serde_json::json!([2]));
    }

    let out = crsim(&["tdma", "--topology", dir.path().join("none.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
