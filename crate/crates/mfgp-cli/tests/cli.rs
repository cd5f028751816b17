//! End-to-end tests of the `mfgp` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mfgp() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mfgp"))
}

fn write_config(dir: &Path, name: &str, json: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn list_benchmarks_prints_all_six() {
    let output = mfgp().arg("list-benchmarks").output().unwrap();
    assert!(output.status.success());
    let text = stdout(&output);
    for name in [
        "simple",
        "embed_demo",
        "phase_shift",
        "periodicity",
        "discontinuity",
        "hh",
    ] {
        assert!(text.lines().any(|l| l == name), "missing {name} in {text}");
    }
}

#[test]
fn run_writes_prediction_csvs() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        "cfg.json",
        r#"{"benchmark": "embed_demo", "methods": ["kriging", "nargp"],
            "n_high": [7], "n_low": 30, "n_test": 50, "n_trials": 1}"#,
    );
    let output = mfgp()
        .arg("run")
        .arg(&config)
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    for method in ["kriging", "nargp"] {
        let path = tmp.path().join(format!("predictions_embed_demo_{method}.csv"));
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,mean,variance,truth"));
        assert_eq!(lines.count(), 50);
    }
}

#[test]
fn sweep_outputs_are_byte_identical_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        "cfg.json",
        r#"{"benchmark": "embed_demo", "methods": ["kriging", "nargp"],
            "n_high": [5, 7], "n_low": 30, "n_test": 50, "n_trials": 2, "seed": 9}"#,
    );
    let mut outputs = Vec::new();
    for run in 0..2 {
        let dir = tmp.path().join(format!("out{run}"));
        let output = mfgp()
            .arg("sweep")
            .arg(&config)
            .arg("--out")
            .arg(&dir)
            .output()
            .unwrap();
        assert!(output.status.success());
        outputs.push((
            fs::read(dir.join("results.csv")).unwrap(),
            fs::read(dir.join("summary.csv")).unwrap(),
        ));
    }
    assert_eq!(outputs[0].0, outputs[1].0, "results.csv differs");
    assert_eq!(outputs[0].1, outputs[1].1, "summary.csv differs");

    let text = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert!(text.starts_with("benchmark,method,n_high,trial,log_l2_error,status,wall_time_ms"));
    // 2 methods x 2 n_high x 2 trials
    assert_eq!(text.lines().count(), 9);
}

#[test]
fn seed_flag_changes_results() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        "cfg.json",
        r#"{"benchmark": "embed_demo", "methods": ["kriging"],
            "n_high": [6], "n_low": 25, "n_test": 40, "n_trials": 1}"#,
    );
    let run = |seed: &str, dir: &str| {
        let out = tmp.path().join(dir);
        let output = mfgp()
            .arg("sweep")
            .arg(&config)
            .arg("--seed")
            .arg(seed)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(output.status.success());
        fs::read(out.join("results.csv")).unwrap()
    };
    assert_ne!(run("1", "a"), run("2", "b"));
}

#[test]
fn simulate_hh_writes_trajectory_with_spikes() {
    let tmp = tempfile::tempdir().unwrap();
    let output = mfgp()
        .args(["simulate-hh", "--i-ext", "1.0", "--t-end", "50", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = fs::read_to_string(tmp.path().join("hh_trajectory.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,V,n,m,h"));
    // threshold used by the spike counter printed on stdout
    let spikes: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .collect();
    let crossings = spikes
        .windows(2)
        .filter(|w| w[0] < -20.0 && w[1] >= -20.0)
        .count();
    assert!(crossings >= 3, "only {crossings} threshold crossings");
}

#[test]
fn invalid_config_fails_with_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "bad.json", r#"{"benchmark": "nope"}"#);
    let output = mfgp()
        .arg("run")
        .arg(&config)
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(!output.status.success());
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.contains("nope"), "stderr: {err}");
}

#[test]
fn missing_config_file_is_an_io_error() {
    let output = mfgp().args(["sweep", "/definitely/not/here.json"]).output().unwrap();
    assert!(!output.status.success());
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.contains("cannot read config"), "stderr: {err}");
}
