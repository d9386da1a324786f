use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn specs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("specs")
}

fn ggp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ggp")).args(args).output().expect("binary runs")
}

fn run(cmd: &str, spec: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--spec", spec.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    ggp(&args)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn load_spec(name: &str) -> Value {
    read_json(&specs().join(name))
}

fn write_spec(dir: &Path, value: &Value) -> PathBuf {
    let path = dir.join("spec.json");
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn subsidy_column(path: &Path) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "subsidy").unwrap();
    r.records().map(|rec| rec.unwrap()[col].parse().unwrap()).collect()
}

#[test]
fn design_two_player_example() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("design", &specs().join("two_player.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = subsidy_column(&dir.path().join("design.csv"));
    assert_eq!(s.len(), 2);
    assert!(s.iter().all(|v| (v - 0.5).abs() < 1e-4), "{s:?}");
    let headers = std::fs::read_to_string(dir.path().join("design.csv")).unwrap();
    assert!(headers.starts_with("player,c_i,avg_externality,subsidy,provenance"));
    let mirror = read_json(&dir.path().join("design.json"));
    assert_eq!(mirror["schema_version"], "1");
    assert_eq!(mirror["rows"][0]["provenance"], "exact_numeric");
}

#[test]
fn zero_externality_subsidy_is_cost_gap() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = load_spec("two_player.json");
    spec["game"]["players"] = json!([
        {"cost": 0.7, "schedule": {"mode": "count_based", "values": [0.0, 0.0]}},
        {"cost": 1.3, "schedule": {"mode": "count_based", "values": [0.0, 0.0]}}
    ]);
    spec["policy"] = json!({"design": {"mode": "closed_form", "target": 0.25}});
    let path = write_spec(dir.path(), &spec);
    assert_eq!(run("design", &path, dir.path(), &[]).status.code(), Some(0));
    let s = subsidy_column(&dir.path().join("design.csv"));
    assert!((s[0] - 0.45).abs() < 1e-15 && (s[1] - 1.05).abs() < 1e-15, "{s:?}");
}

#[test]
fn closed_form_and_exact_modes_agree() {
    let spec = specs().join("verify_small.json");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run("design", &spec, a.path(), &["--mode", "closed_form"]).status.code(), Some(0));
    assert_eq!(run("design", &spec, b.path(), &["--mode", "exact"]).status.code(), Some(0));
    let sa = subsidy_column(&a.path().join("design.csv"));
    let sb = subsidy_column(&b.path().join("design.csv"));
    for (x, y) in sa.iter().zip(&sb) {
        assert!((x - y).abs() < 1e-6, "{sa:?} vs {sb:?}");
    }
    assert_eq!(read_json(&b.path().join("design.json"))["spec"]["policy"]["design"]["mode"], "exact");
}

#[test]
fn emitted_spec_reingests_identically() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("design", &specs().join("two_player.json"), dir.path(), &["--eps", "0.05", "--seed", "11"]);
    assert_eq!(o.status.code(), Some(0));
    let first = read_json(&dir.path().join("design.json"));
    let spec = &first["spec"];
    // Every section is present in the emitted document: no hidden defaults.
    for key in ["quadrature", "solver", "simulate", "verify", "policy"] {
        assert!(spec.get(key).is_some(), "missing {key}");
    }
    assert_eq!(spec["noise"]["epsilon"], 0.05);
    assert_eq!(spec["simulate"]["seed"], 11);
    let again = tempfile::tempdir().unwrap();
    let path = write_spec(again.path(), spec);
    assert_eq!(run("design", &path, again.path(), &[]).status.code(), Some(0));
    let second = read_json(&again.path().join("design.json"));
    assert_eq!(first["spec"], second["spec"]);
    assert_eq!(first["rows"], second["rows"]);
}

#[test]
fn unknown_field_exits_2_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = load_spec("two_player.json");
    spec["noise"]["sigma"] = json!(1.0);
    let path = write_spec(dir.path(), &spec);
    let o = run("design", &path, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("noise") && err.contains("sigma"), "{err}");
}

#[test]
fn solve_writes_report_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("solve", &specs().join("two_player.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["report"]["converged"], true);
    for x in report["report"]["x_of_s"].as_array().unwrap() {
        assert!(x.as_f64().unwrap().abs() < 1e-6);
    }
    let mut r = csv::Reader::from_path(dir.path().join("trace.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(&rows[0][0], "upper");
    assert_eq!(rows[0][2].parse::<f64>().unwrap(), 2.0);
    let lower_start = rows.iter().find(|row| &row[0] == "lower").unwrap();
    assert_eq!(lower_start[2].parse::<f64>().unwrap(), -1.0);
}

#[test]
fn unresolved_gap_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("solve", &specs().join("tent_prior.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gap"));
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["report"]["converged"], false);
    assert!(report["report"]["gap"].as_f64().unwrap() > 0.05);
}

#[test]
fn dominance_outside_bounds_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = load_spec("two_player.json");
    spec["policy"] = json!({"scheme": {"subsidies": [5.0, 0.5]}});
    let path = write_spec(dir.path(), &spec);
    assert_eq!(run("solve", &path, dir.path(), &[]).status.code(), Some(2));
}

#[test]
fn quadrature_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = load_spec("two_player.json");
    spec["noise"] = json!({"epsilon": 0.5, "density": {"kind": "raised_cosine"}});
    spec["quadrature"] = json!({"nodes": 9, "tolerance": 1e-12});
    let path = write_spec(dir.path(), &spec);
    let o = run("solve", &path, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("node-doubling"));
}

#[test]
fn simulation_is_reproducible_across_thread_counts() {
    let spec = specs().join("two_player.json");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let extra = ["--eps", "0.05", "--draws", "2000", "--seed", "5"];
    assert_eq!(run("simulate", &spec, a.path(), &extra).status.code(), Some(0));
    let mut with_threads = extra.to_vec();
    with_threads.extend(["--threads", "1"]);
    assert_eq!(run("simulate", &spec, b.path(), &with_threads).status.code(), Some(0));
    let da = std::fs::read_to_string(a.path().join("draws.csv")).unwrap();
    let db = std::fs::read_to_string(b.path().join("draws.csv")).unwrap();
    assert_eq!(da, db);
    assert_eq!(da.lines().count(), 2001);
    let summary = read_json(&a.path().join("summary.json"));
    assert_eq!(summary["summary"]["draws"], 2000);
    assert_eq!(summary["summary"]["rng"], "chacha20-stream-per-draw");
}

#[test]
fn verify_agrees_with_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("verify", &specs().join("verify_small.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&dir.path().join("verify.json"));
    assert_eq!(v["agree"], true);
    assert!(v["max_deviation"].as_f64().unwrap() <= 0.002);
    assert_eq!(v["bands"].as_array().unwrap().len(), 3);
}

#[test]
fn asymmetric_design_example() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("design", &specs().join("asymmetric.json"), dir.path(), &[]).status.code(), Some(0));
    let s = subsidy_column(&dir.path().join("design.csv"));
    assert!((s[0] - 1.0).abs() < 1e-15 && (s[1] + 0.8).abs() < 1e-12, "{s:?}");
    let o = run("solve", &specs().join("asymmetric.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let x = read_json(&dir.path().join("report.json"))["report"]["x_of_s"].clone();
    assert!((x[0].as_f64().unwrap()).abs() < 1e-3 && (x[1].as_f64().unwrap() - 1.0).abs() < 1e-3);
}

#[test]
fn missing_target_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = load_spec("two_player.json");
    spec["policy"] = json!({"design": {"mode": "closed_form"}});
    let path = write_spec(dir.path(), &spec);
    let o = run("design", &path, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("policy.design.target"));
}
