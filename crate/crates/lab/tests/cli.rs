//! The `shrinker-lab` binary: flags, environment, exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"{
  "targets": {"probes": 10},
  "prop41": {"v_count": 20, "r_resolution": 100, "infimum_samples": 1001, "samples": 500,
             "restarts": 2, "regroup_samples": 200, "tight_samples": 20},
  "flow": {"resolution": 17}
}"#;

fn lab(dir: &Path, args: &[&str]) -> Output {
    let cfg = dir.join("small.json");
    if !cfg.exists() {
        fs::write(&cfg, SMALL).unwrap();
    }
    Command::new(env!("CARGO_BIN_EXE_shrinker-lab"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .env_remove("SHRINKER_LAB_OUT")
        .env("SOURCE_DATE_EPOCH", "1767225600")
        .current_dir(dir)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn passing_run_exits_zero_and_prints_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(dir.path(), &["verify-targets", "--out", "runs"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.starts_with("verify-targets PASS"), "{stdout}");
    assert!(dir.path().join("runs/verify-targets/report.json").is_file());
}

#[test]
fn source_date_epoch_sets_the_recorded_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    lab(dir.path(), &["verify-targets", "--out", "runs"]);
    let text = fs::read_to_string(dir.path().join("runs/verify-targets/report.json")).unwrap();
    assert!(text.contains("\"timestamp\": \"2026-01-01T00:00:00Z\""), "{text}");
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(
        dir.path(),
        &["verify-targets", "--out", "runs", "--tolerance-scale", "1e-6"],
    );
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("verify-targets FAIL"));
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"targets": {"probez": 3}}"#).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_shrinker-lab"))
        .args(["verify-targets", "--config"])
        .arg(&bad)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("probez"));

    assert_eq!(code(&lab(dir.path(), &["verify-targets", "--jobs", "0"])), 2);
    assert_eq!(
        code(&lab(dir.path(), &["verify-targets", "--tolerance-scale", "-1"])),
        2
    );
    assert_eq!(code(&lab(dir.path(), &["no-such-command"])), 2);
}

#[test]
fn environment_overrides_the_output_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    fs::write(&cfg, SMALL).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_shrinker-lab"))
        .args(["verify-targets", "--out", "flag-dir", "--config"])
        .arg(&cfg)
        .env("SHRINKER_LAB_OUT", dir.path().join("env-dir"))
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("env-dir/verify-targets/report.json").is_file());
    assert!(!dir.path().join("flag-dir").exists());
}

#[test]
fn print_config_reflects_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(dir.path(), &["verify-prop41", "--seed", "7", "--print-config"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["seed"], 7);
    assert_eq!(v["prop41"]["v_count"], 20);
    assert!(!dir.path().join("lab-out").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    lab(dir.path(), &["flow-graph", "--out", "a"]);
    lab(dir.path(), &["flow-graph", "--out", "b"]);
    for f in ["report.json", "trace.csv", "trace.svg", "field_final.csv"] {
        let a = fs::read(dir.path().join("a/flow-graph").join(f)).unwrap();
        let b = fs::read(dir.path().join("b/flow-graph").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn report_bundles_previous_runs() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&lab(dir.path(), &["verify-targets", "--out", "runs"])), 0);
    assert_eq!(code(&lab(dir.path(), &["verify-prop41", "--out", "runs"])), 0);
    let o = lab(dir.path(), &["report", "--out", "runs"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let csv = fs::read_to_string(dir.path().join("runs/report/checks.csv")).unwrap();
    assert!(csv.contains("verify-targets") && csv.contains("verify-prop41"));
}
