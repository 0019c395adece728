use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn epigame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epigame"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let value: Value = serde_json::from_str(&text).unwrap();
    jsonschema::validator_for(&value).unwrap()
}

fn assert_valid(name: &str, instance: &Value) {
    let v = schema(name);
    let errors: Vec<String> = v.iter_errors(instance).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{name}: {errors:#?}\n{instance:#}");
}

fn json(out: &Output) -> Value {
    serde_json::from_str(&stdout(out)).unwrap_or_else(|e| panic!("{e}: {}", stdout(out)))
}

fn trace_lines(out: &Output) -> Vec<Value> {
    let lines: Vec<Value> = stdout(out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    for line in &lines {
        assert_valid("trace-line.schema.json", line);
    }
    lines
}

fn strings(v: &Value) -> Vec<String> {
    v.as_array().unwrap().iter().map(|x| x.as_str().unwrap().to_string()).collect()
}

#[test]
fn trace_infected_mover_absorbs_at_once() {
    let out = epigame(&["trace", "--seq", "1", "--a", "1", "--tau", "0.5", "--n", "5"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let lines = trace_lines(&out);
    let summary = lines.last().unwrap();
    assert_eq!(summary["kind"], "summary");
    assert_eq!(summary["absorbed"], true);
    assert_eq!(summary["absorbed_at"], 1);
    assert_eq!(summary["limit"]["infected"], serde_json::json!([1]));
}

#[test]
fn trace_hand_executed_sequence() {
    let out = epigame(&["trace", "--seq", "2,1", "--a", "0", "--tau", "0.4", "--n", "3"]);
    assert_eq!(code(&out), 0);
    let lines = trace_lines(&out);
    assert_eq!(lines.len(), 4);
    let last_epoch = &lines[2];
    assert_eq!(last_epoch["infected"], serde_json::json!([1, 2]));
    assert_eq!(strings(&last_epoch["actions"]), ["1", "1", "0"]);
    assert_eq!(strings(&lines[3]["limit"]["actions"]), ["1", "1", "2/5"]);
}

#[test]
fn trace_empty_sequence_prints_only_the_initial_state() {
    let out = epigame(&["trace", "--a", "0.3", "--tau", "0.2", "--n", "4"]);
    let lines = trace_lines(&out);
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["kind"], "initial");
    assert_eq!(lines[1]["kind"], "summary");
    assert_eq!(lines[1]["epochs"], 0);
    assert_eq!(code(&out), 2);
}

#[test]
fn trace_horizon_exhaustion_exits_two() {
    let out = epigame(&["trace", "--seq", "2", "--a", "0.3", "--tau", "0.2", "--n", "3"]);
    assert_eq!(code(&out), 2);
    assert_eq!(trace_lines(&out).last().unwrap()["absorbed"], false);
}

#[test]
fn trace_rejects_bad_agents() {
    for seq in ["6", "0", "x", "1,-2"] {
        let out = epigame(&["trace", "--seq", seq, "--a", "0", "--tau", "0.3", "--n", "5"]);
        assert_eq!(code(&out), 1, "seq {seq}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn trace_csv() {
    let out = epigame(&["trace", "--seq", "2,1", "--a", "0", "--tau", "0.4", "--n", "3", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.starts_with("epoch,chosen,infected,actions\n"), "{text}");
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn theory_zero_initial_law() {
    let out = epigame(&["theory", "--n", "5", "--a", "0", "--tau", "0.25"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_valid("theory.schema.json", &v);
    assert_eq!(strings(&v["size_law"]), ["2/5", "1/5", "1/5", "1/5", "0"]);
    assert_eq!(v["regime"], "zero-initial");
}

#[test]
fn theory_saturating_law_carries_eta() {
    let out = epigame(&["theory", "--n", "5", "--a", "0.35", "--tau", "0.255"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_valid("theory.schema.json", &v);
    assert_eq!(v["regime"], "high-initial");
    assert_eq!(strings(&v["size_law"])[3], "6/125");
}

#[test]
fn theory_uncovered_band_exits_three() {
    let out = epigame(&["theory", "--n", "5", "--a", "0.2", "--tau", "0.15"]);
    assert_eq!(code(&out), 3);
    let v = json(&out);
    assert_valid("uncovered.schema.json", &v);
    assert_eq!(v["status"], "uncovered");
}

#[test]
fn theory_csv() {
    let out = epigame(&["theory", "--n", "5", "--a", "0", "--tau", "0.25", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).lines().count() > 1);
}

#[test]
fn enumerate_table_row() {
    let out = epigame(&["enumerate", "--n", "5", "--a", "0", "--tau", "0.3", "--horizon", "9"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_valid("enumerate.schema.json", &v);
    assert_eq!(strings(&v["marginal_decimal"]), ["0.420", "0.200", "0.199", "0.181", "0.000"]);
}

#[test]
fn enumerate_csv_and_precision() {
    let out = epigame(&[
        "enumerate", "--n", "3", "--a", "0", "--tau", "0.4", "--horizon", "2", "--format", "csv", "--precision", "5",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("size,probability,decimal"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "1");
    assert_eq!(first[2].split('.').nth(1).unwrap().len(), 5);
}

#[test]
fn enumerate_support_cap_exits_four() {
    let out = epigame(&["enumerate", "--n", "5", "--a", "0", "--tau", "0.3", "--horizon", "9", "--support-cap", "10"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn enumerate_needs_exact_arithmetic() {
    let out = epigame(&["enumerate", "--n", "3", "--a", "0", "--tau", "0.4", "--horizon", "2", "--arithmetic", "float"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn simulate_requires_a_seed() {
    let out = epigame(&["simulate", "--n", "3", "--a", "0", "--tau", "0.4"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn simulate_output_validates_and_compares() {
    let out = epigame(&["simulate", "--n", "3", "--a", "0", "--tau", "0.4", "--seed", "7", "--samples", "2000"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_valid("simulate.schema.json", &v);
    assert_eq!(v["non_absorbed"], 0);
    let total: u64 = v["size_counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(total, 2000);
    assert!(v["theory"]["tv_distance"].as_f64().unwrap() < 0.05);
}

#[test]
fn simulate_uncovered_has_null_theory() {
    let out = epigame(&["simulate", "--n", "5", "--a", "0.2", "--tau", "0.15", "--seed", "1", "--samples", "200"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_valid("simulate.schema.json", &v);
    assert!(v["theory"].is_null());
}

#[test]
fn simulate_is_byte_identical_and_thread_independent() {
    let base = ["simulate", "--n", "4", "--a", "0.35", "--tau", "0.3", "--seed", "11", "--samples", "3000"];
    let once = epigame(&base);
    let again = epigame(&base);
    assert_eq!(once.stdout, again.stdout);
    for threads in ["1", "3"] {
        let mut args = base.to_vec();
        args.extend(["--threads", threads]);
        assert_eq!(epigame(&args).stdout, once.stdout, "threads {threads}");
    }
    let other = epigame(&["simulate", "--n", "4", "--a", "0.35", "--tau", "0.3", "--seed", "12", "--samples", "3000"]);
    assert_ne!(other.stdout, once.stdout);
}

#[test]
fn simulate_float_arithmetic() {
    let out = epigame(&[
        "simulate", "--n", "4", "--a", "0.35", "--tau", "0.3", "--seed", "3", "--samples", "500", "--arithmetic", "float",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_valid("simulate.schema.json", &v);
    assert_eq!(v["arithmetic"], "float");
}

#[test]
fn enumerate_is_thread_independent() {
    let base = ["enumerate", "--n", "4", "--a", "0.35", "--tau", "0.3", "--horizon", "5"];
    let one = epigame(&[&base[..], &["--threads", "1"]].concat());
    let four = epigame(&[&base[..], &["--threads", "4"]].concat());
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn compare_default_grid_is_csv() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.csv");
    std::fs::write(&grid, "a,tau,horizon\n0,0.3,9\n1,0.5\n0.2,0.15,3\n").unwrap();
    let out = epigame(&["compare", "--grid", grid.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn compare_json_validates() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.json");
    std::fs::write(&grid, r#"[{"a": "0", "tau": "0.3"}, {"a": 0.2, "tau": 0.15, "horizon": 2}]"#).unwrap();
    let out = epigame(&["compare", "--grid", grid.to_str().unwrap(), "--horizon", "4", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_valid("compare.schema.json", &v);
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["horizon"], 4);
    assert_eq!(rows[1]["covered"], false);
    assert!(rows[1]["theoretical"].is_null());
}

#[test]
fn compare_monte_carlo_needs_seed() {
    let out = epigame(&["compare", "--method", "monte-carlo", "--samples", "100"]);
    assert_eq!(code(&out), 1);
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.csv");
    std::fs::write(&grid, "0,0.3\n").unwrap();
    let args = [
        "compare", "--grid", grid.to_str().unwrap(), "--method", "monte-carlo", "--samples", "500", "--seed", "5",
        "--format", "json",
    ];
    let out = epigame(&args);
    assert_eq!(code(&out), 0);
    assert_valid("compare.schema.json", &json(&out));
    assert_eq!(out.stdout, epigame(&args).stdout);
}

#[test]
fn compare_support_cap_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.csv");
    std::fs::write(&grid, "0,0.3,9\n").unwrap();
    let out = epigame(&["compare", "--grid", grid.to_str().unwrap(), "--support-cap", "5"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn compare_plot_data_series() {
    let out = epigame(&["compare", "--plot-data", "--n", "3", "--a", "0", "--tau", "0.4", "--horizon", "6"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 7);
    let tv: Vec<f64> = rows.iter().map(|r| r.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(tv.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{tv:?}");
}

#[test]
fn output_flag_writes_the_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("law.json");
    let direct = epigame(&["theory", "--n", "5", "--a", "0", "--tau", "0.25"]);
    let out = epigame(&["theory", "--n", "5", "--a", "0", "--tau", "0.25", "--output", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), direct.stdout);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"n": 4, "a": "0", "tau": 0.3}"#).unwrap();
    let cfg = path.to_str().unwrap();

    let from_file = json(&epigame(&["theory", "--config", cfg]));
    assert_eq!(from_file["n"], 4);
    assert_eq!(from_file["tau"], "3/10");

    let overridden = json(&epigame(&["theory", "--config", cfg, "--tau", "1/4", "--n", "5"]));
    assert_eq!(overridden["n"], 5);
    assert_eq!(overridden["tau"], "1/4");
    assert_eq!(overridden["a"], "0");
    assert_eq!(strings(&overridden["size_law"]), ["2/5", "1/5", "1/5", "1/5", "0"]);
}

#[test]
fn invalid_configs_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"n": 4, "a": "0", "tau": 0.3, "bogus": 1}"#).unwrap();
    assert_eq!(code(&epigame(&["theory", "--config", path.to_str().unwrap()])), 1);
    assert_eq!(code(&epigame(&["theory", "--config", "/nonexistent/cfg.json"])), 1);
    assert_eq!(code(&epigame(&["theory", "--n", "5", "--a", "1.5", "--tau", "0.3"])), 1);
    assert_eq!(code(&epigame(&["theory", "--n", "5", "--a", "0", "--tau", "0"])), 1);
    assert_eq!(code(&epigame(&["theory", "--n", "1", "--a", "0", "--tau", "0.3"])), 1);
    assert_eq!(code(&epigame(&["frobnicate"])), 1);
    assert_eq!(code(&epigame(&["--help"])), 0);
}
