use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_procure-learn"));
    cmd.env_remove("PROCURE_LEARN_SEED");
    cmd
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().unwrap()
}

fn seeds_in_summary(dir: &Path) -> Vec<String> {
    let text = std::fs::read_to_string(dir.join("summary.csv")).unwrap();
    text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().to_string()).collect()
}

#[test]
fn run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = write_config(
        dir.path(),
        &format!(
            r#"{{"instance": {{"kind": "coin", "rounds": 300}}, "trials": 2, "output_dir": {:?}}}"#,
            out.to_str().unwrap()
        ),
    );
    let o = run(bin().args(["run", "--config"]).arg(&config).args(["--jobs", "1"]));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("regret:"));
    for file in ["transcript.csv", "summary.csv", "timings.csv"] {
        assert!(out.join(file).exists(), "{file}");
    }
    assert_eq!(seeds_in_summary(&out), ["0", "1"]);
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = write_config(
        dir.path(),
        &format!(
            r#"{{"instance": {{"kind": "coin", "rounds": 50}}, "seed": 1, "output_dir": {:?}}}"#,
            out.to_str().unwrap()
        ),
    );
    let o = run(bin().args(["run", "--config"]).arg(&config).env("PROCURE_LEARN_SEED", "7"));
    assert!(o.status.success());
    assert_eq!(seeds_in_summary(&out), ["7"]);
    let o = run(bin().args(["run", "--config"]).arg(&config).args(["--seed", "9"]).env("PROCURE_LEARN_SEED", "7"));
    assert!(o.status.success());
    assert_eq!(seeds_in_summary(&out), ["9"]);
    let o = run(bin().args(["run", "--config"]).arg(&config).env("PROCURE_LEARN_SEED", "seven"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(bin().args(["run", "--config"]).arg(dir.path().join("missing.json")));
    assert_eq!(o.status.code(), Some(2));
    let config = write_config(dir.path(), r#"{"trials": 0}"#);
    let o = run(bin().args(["run", "--config"]).arg(&config));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("trials"));
    let config = write_config(dir.path(), r#"{"instance": {"kind": "coin"}}"#);
    let o = run(bin().args(["sweep", "--config"]).arg(&config));
    assert_eq!(o.status.code(), Some(2), "sweep without a budget grid");
}

#[test]
fn oracle_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"instance": {"kind": "gamma", "rounds": 1000, "gamma": 0.3}}"#);
    let o = run(bin().args(["oracle", "--config"]).arg(&config));
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let gamma_star = report["stats"]["gamma_star"].as_f64().unwrap();
    assert!((gamma_star - 0.3).abs() < 1e-12);
}

#[test]
fn quick_verify_passes() {
    let o = run(bin().args(["verify", "--quick"]));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["passed"], true);
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.len() >= 10);
    for check in checks {
        assert!(check.get("observed").is_some() && check.get("expected").is_some());
    }
}
