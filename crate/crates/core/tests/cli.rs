//! End-to-end tests of the `vcount` binary: exit codes, report envelope,
//! schema validity of emitted reports, and error output.

use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vcount"))
}

fn fixtures() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("model.json"),
        r#"{
  "version": 1,
  "layers": [
    {"weights": [[5.0, -1.0], [-1.0, 3.0]], "biases": [0.0, 0.0], "activation": "relu"},
    {"weights": [[-1.0, 3.0]], "biases": [0.0], "activation": "identity"}
  ]
}"#,
    )
    .unwrap();
    std::fs::write(
        dir.path().join("prop.json"),
        r#"{
  "input": [{"lo": 0.0, "hi": 1.0}, {"lo": 0.0, "hi": 1.0}],
  "output_constraints": [[{"coeffs": [1.0], "offset": 0.0, "relation": "LT"}]]
}"#,
    )
    .unwrap();
    std::fs::write(
        dir.path().join("safe.json"),
        r#"{
  "input": [{"lo": 0.0, "hi": 1.0}, {"lo": 0.0, "hi": 1.0}],
  "output_constraints": [[{"coeffs": [1.0], "offset": 100.0, "relation": "LT"}]]
}"#,
    )
    .unwrap();
    std::fs::write(
        dir.path().join("f.cnf"),
        "c fixture\np cnf 3 2\n1 -2 3 0\n-1 2 0\n",
    )
    .unwrap();
    dir
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn schema_validator() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas/report.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_schema_valid(validator: &jsonschema::Validator, report: &Value) {
    let errors: Vec<String> = validator.iter_errors(report).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "schema violations: {errors:?}\nreport: {report}");
}

fn instance_args(dir: &tempfile::TempDir, property: &str, epsilon: &str) -> Vec<String> {
    vec![
        "--model".into(),
        dir.path().join("model.json").display().to_string(),
        "--property".into(),
        dir.path().join(property).display().to_string(),
        "--epsilon".into(),
        epsilon.into(),
    ]
}

#[test]
fn verify_sat_exit_one_with_witness() {
    let dir = fixtures();
    let out = bin().arg("verify").args(instance_args(&dir, "prop.json", "0.01")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["result"]["kind"], "SAT");
    assert_eq!(r["result"]["witness"].as_array().unwrap().len(), 2);
    assert_schema_valid(&schema_validator(), &r);
}

#[test]
fn verify_unsat_exit_zero() {
    let dir = fixtures();
    let out = bin().arg("verify").args(instance_args(&dir, "safe.json", "0.01")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["kind"], "UNSAT");
}

#[test]
fn verify_timeout_exit_two() {
    let dir = fixtures();
    let out = bin()
        .arg("verify")
        .args(instance_args(&dir, "safe.json", "0.0001"))
        .args(["--node-limit", "1", "--leaf-threshold", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&out)["result"]["kind"], "TIMEOUT");
}

#[test]
fn count_exact_matches_brute_and_validates() {
    let dir = fixtures();
    let validator = schema_validator();
    let exact = bin()
        .arg("count-exact")
        .args(instance_args(&dir, "prop.json", "0.01"))
        .output()
        .unwrap();
    assert_eq!(exact.status.code(), Some(0));
    let brute = bin()
        .arg("count-brute")
        .args(instance_args(&dir, "prop.json", "0.01"))
        .output()
        .unwrap();
    assert_eq!(brute.status.code(), Some(0));
    let (re, rb) = (report(&exact), report(&brute));
    assert_eq!(re["result"]["violations"], rb["result"]["violations"]);
    assert_eq!(re["result"]["total"], "10201");
    assert_schema_valid(&validator, &re);
    assert_schema_valid(&validator, &rb);
}

#[test]
fn count_brute_cap_refusal_exit_three() {
    let dir = fixtures();
    let out = bin()
        .arg("count-brute")
        .args(instance_args(&dir, "prop.json", "0.01"))
        .args(["--cap", "100"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["code"], "budget_refused");
    assert!(err["message"].as_str().unwrap().contains("10201"));
}

#[test]
fn missing_model_is_input_error_exit_four() {
    let dir = fixtures();
    let out = bin()
        .arg("count-exact")
        .args([
            "--model",
            "/nonexistent/model.json",
            "--property",
            &dir.path().join("prop.json").display().to_string(),
            "--epsilon",
            "0.1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["code"], "io");
}

#[test]
fn count_approx_reports_confidence_and_echoes_seed() {
    let dir = fixtures();
    let out = bin()
        .arg("count-approx")
        .args(instance_args(&dir, "prop.json", "0.01"))
        .args(["--beta", "0.02", "--t", "350", "--m", "5", "--prelim-splits", "12", "--seed", "7"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    let confidence = r["result"]["confidence"].as_f64().unwrap();
    assert!((confidence - (1.0 - 2f64.powi(-7))).abs() < 1e-12);
    assert_eq!(r["config"]["seed"], 7);
    assert_eq!(r["result"]["config"]["seed"], 7);
    assert_schema_valid(&schema_validator(), &r);
}

#[test]
fn count_approx_generated_seed_is_echoed_and_replayable() {
    let dir = fixtures();
    let args = instance_args(&dir, "prop.json", "0.05");
    let extra = ["--beta", "0.5", "--t", "3", "--m", "5", "--prelim-splits", "4"];
    let first = bin().arg("count-approx").args(&args).args(extra).output().unwrap();
    assert_eq!(first.status.code(), Some(0));
    let r1 = report(&first);
    let seed = r1["config"]["seed"].as_u64().unwrap().to_string();
    let second = bin()
        .arg("count-approx")
        .args(&args)
        .args(extra)
        .args(["--seed", &seed])
        .output()
        .unwrap();
    let r2 = report(&second);
    assert_eq!(r1["result"]["lower_bound"], r2["result"]["lower_bound"]);
    assert_eq!(r1["result"]["traces"], r2["result"]["traces"]);
}

#[test]
fn count_approx_auto_prelim_is_resolved_in_echo() {
    let dir = fixtures();
    let out = bin()
        .arg("count-approx")
        .args(instance_args(&dir, "prop.json", "0.1"))
        .args(["--beta", "0.5", "--t", "2", "--m", "5", "--seed", "1"])
        .output()
        .unwrap();
    let r = report(&out);
    // 11 x 11 = 121 points, floor(log2) - 1 = 5
    assert_eq!(r["config"]["prelim_splits"], serde_json::json!({ "fixed": 5 }));
}

#[test]
fn count_cnf_reduction_equals_brute() {
    let dir = fixtures();
    let dimacs = dir.path().join("f.cnf").display().to_string();
    let via_red = bin().args(["count-cnf", "--dimacs", &dimacs, "--via", "reduction"]).output().unwrap();
    let via_brute = bin().args(["count-cnf", "--dimacs", &dimacs, "--via", "brute"]).output().unwrap();
    let (rr, rb) = (report(&via_red), report(&via_brute));
    assert_eq!(rr["result"]["models"], rb["result"]["models"]);
    assert_eq!(rr["result"]["models"], "5");
    let validator = schema_validator();
    assert_schema_valid(&validator, &rr);
    assert_schema_valid(&validator, &rb);
}

#[test]
fn reduce_cnf_artifacts_count_back_to_model_count() {
    let dir = fixtures();
    let dimacs = dir.path().join("f.cnf").display().to_string();
    let model = dir.path().join("out_model.json");
    let property = dir.path().join("out_prop.json");
    let out = bin()
        .args(["reduce-cnf", "--dimacs", &dimacs])
        .args(["--out-model", &model.display().to_string()])
        .args(["--out-property", &property.display().to_string()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let count = bin()
        .args(["count-exact", "--epsilon", "1"])
        .args(["--model", &model.display().to_string()])
        .args(["--property", &property.display().to_string()])
        .output()
        .unwrap();
    assert_eq!(report(&count)["result"]["violations"], "5");
}

#[test]
fn info_reports_shapes_and_grid() {
    let dir = fixtures();
    let out = bin()
        .args(["info", "--model", &dir.path().join("model.json").display().to_string()])
        .args(["--property", &dir.path().join("prop.json").display().to_string()])
        .args(["--epsilon", "0.01"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["input_dim"], 2);
    assert_eq!(r["result"]["output_dim"], 1);
    assert_eq!(r["result"]["property"]["grid_points"], "10201");
}

#[test]
fn output_flag_writes_file() {
    let dir = fixtures();
    let path: PathBuf = dir.path().join("report.json");
    let out = bin()
        .arg("count-brute")
        .args(instance_args(&dir, "prop.json", "0.1"))
        .args(["--output", &path.display().to_string()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(r["command"], "count-brute");
}
