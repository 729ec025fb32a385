use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use swapnet::hamiltonian::QubitPair;
use swapnet::rng::rng_from_seed;
use swapnet::states::{SampleMode, TrainingSetManifest};
use swapnet::ControlParameters;

fn swapnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swapnet")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

fn write_params(path: &Path, n: usize) {
    let mut rng = rng_from_seed(5);
    let p = ControlParameters::random(n, 1, 2.0 * std::f64::consts::PI, &QubitPair::all(n), 0.5, &mut rng).unwrap();
    fs::write(path, serde_json::to_string(&p).unwrap()).unwrap();
}

#[test]
fn dry_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let res = swapnet(&["--out-dir", out.to_str().unwrap(), "train", "--dry-run"]);
    assert_eq!(code(&res), 0);
    assert!(!out.exists());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{").unwrap();
    assert_eq!(code(&swapnet(&["train", bad.to_str().unwrap()])), 2);

    let wrong_schema = dir.path().join("wrong.json");
    fs::write(&wrong_schema, r#"{"schema":"swapnet/sweep/v1"}"#).unwrap();
    let res = swapnet(&["train", wrong_schema.to_str().unwrap(), "--dry-run"]);
    assert_eq!(code(&res), 2);
    assert!(String::from_utf8_lossy(&res.stderr).contains("schema"));

    let unknown = dir.path().join("unknown.json");
    fs::write(&unknown, r#"{"schema":"swapnet/train/v1","learning_rate":1}"#).unwrap();
    assert_eq!(code(&swapnet(&["train", unknown.to_str().unwrap(), "--dry-run"])), 2);

    assert_eq!(code(&swapnet(&["transfer", bad.to_str().unwrap(), "--n-pairs", "2"])), 2);
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&swapnet(&["evaluate", missing.to_str().unwrap()])), 2);
}

#[test]
fn empty_rnp_grid_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    fs::write(&cfg, r#"{"schema":"swapnet/sweep/v1","rnp_values":[]}"#).unwrap();
    assert_eq!(code(&swapnet(&["noise-sweep", cfg.to_str().unwrap(), "--dry-run"])), 2);
}

#[test]
fn transfer_arity_and_identity() {
    let dir = tempfile::tempdir().unwrap();
    let two = dir.path().join("two.json");
    write_params(&two, 2);
    let out = dir.path().to_str().unwrap();

    let res = swapnet(&["--out-dir", out, "transfer", two.to_str().unwrap(), "--n-pairs", "1", "--output", "one.json"]);
    assert_eq!(code(&res), 0);
    let a: ControlParameters = serde_json::from_str(&fs::read_to_string(&two).unwrap()).unwrap();
    let b: ControlParameters = serde_json::from_str(&fs::read_to_string(dir.path().join("one.json")).unwrap()).unwrap();
    assert_eq!(a, b);

    let res = swapnet(&["--out-dir", out, "transfer", two.to_str().unwrap(), "--n-pairs", "4", "--output", "eight.json"]);
    assert_eq!(code(&res), 0);
    let eight: ControlParameters = serde_json::from_str(&fs::read_to_string(dir.path().join("eight.json")).unwrap()).unwrap();
    assert_eq!(eight.n_qubits(), 8);

    let three = dir.path().join("three.json");
    write_params(&three, 3);
    assert_eq!(code(&swapnet(&["transfer", three.to_str().unwrap(), "--n-pairs", "2"])), 2);
    assert_eq!(code(&swapnet(&["transfer", two.to_str().unwrap(), "--n-pairs", "5"])), 2);
}

#[test]
fn evaluate_rejects_mismatched_manifest() {
    let dir = tempfile::tempdir().unwrap();
    write_params(&dir.path().join("p.json"), 2);
    let manifest = TrainingSetManifest::new(4, 1, 3, SampleMode::Joint).unwrap();
    fs::write(dir.path().join("m.json"), serde_json::to_string(&manifest).unwrap()).unwrap();
    let cfg = dir.path().join("eval.json");
    fs::write(&cfg, r#"{"schema":"swapnet/evaluate/v1","params":"p.json","test_set":"m.json"}"#).unwrap();
    let res = swapnet(&["--out-dir", dir.path().join("o").to_str().unwrap(), "evaluate", cfg.to_str().unwrap()]);
    assert_eq!(code(&res), 2);
    assert!(String::from_utf8_lossy(&res.stderr).contains("dimension mismatch"));
}

#[test]
fn zero_rnp_complex_noise_equals_noiseless() {
    let dir = tempfile::tempdir().unwrap();
    write_params(&dir.path().join("p.json"), 2);
    let manifest = TrainingSetManifest::new(2, 3, 3, SampleMode::Joint).unwrap();
    fs::write(dir.path().join("m.json"), serde_json::to_string(&manifest).unwrap()).unwrap();
    let cfg = dir.path().join("eval.json");
    fs::write(
        &cfg,
        r#"{"schema":"swapnet/evaluate/v1","params":"p.json","test_set":"m.json",
            "evolution":{"n_steps":100},"noise_kinds":["none","complex_noise"],"rnp_values":[0.0],"n_noise_draws":2}"#,
    )
    .unwrap();
    let out = dir.path().join("o");
    assert_eq!(code(&swapnet(&["--out-dir", out.to_str().unwrap(), "evaluate", cfg.to_str().unwrap()])), 0);
    let records = swapnet::harness::read_records(&fs::read_to_string(out.join("evaluation.csv")).unwrap()).unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0].rms_mean, records[1].rms_mean);
    assert!(records.iter().all(|r| r.is_ok() && r.params_hash.len() == 64));
}

#[test]
fn oracle_check_and_sentinel() {
    let ok = swapnet(&["oracle-check"]);
    assert_eq!(code(&ok), 0);
    let text = String::from_utf8_lossy(&ok.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 3);

    let bad = swapnet(&["oracle-check", "--corrupted-weights"]);
    assert_eq!(code(&bad), 3);
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL rk4 order"));
}
