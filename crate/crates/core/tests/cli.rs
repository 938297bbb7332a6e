use std::fs;
use std::path::Path;
use std::process::Command;

fn halfspace(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_halfspace")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("sweep.toml");
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

const SMALL: &str = r#"
seeds = [0]
output_dir = "out"

[learner]
eval_points = 1000

[sweep]
d = [10]
s = [2]
eta = [0.1]
epsilon = [0.3]

[panel]
enabled = false
"#;

#[test]
fn run_then_table_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = halfspace(&["run", &config, "--jobs", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out/runs.csv").exists());
    assert!(dir.path().join("out/summary.json").exists());

    let out_dir = dir.path().join("out").display().to_string();
    let out = halfspace(&["table", &out_dir]);
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("out/label_complexity.csv").exists());
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), &SMALL.replace("eval_points", "bogus_key"));
    assert_eq!(halfspace(&["run", &bad]).status.code(), Some(1));

    let missing = dir.path().join("nope.toml").display().to_string();
    assert_eq!(halfspace(&["run", &missing]).status.code(), Some(1));

    let noisy = write_config(dir.path(), &SMALL.replace("eta = [0.1]", "eta = [0.5]"));
    assert_eq!(halfspace(&["run", &noisy]).status.code(), Some(1));

    assert_eq!(halfspace(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(halfspace(&["--profile", "weird", "lemmas"]).status.code(), Some(1));
}

#[test]
fn paper_profile_is_refused_as_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = halfspace(&["run", &config, "--profile", "paper"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("runnable"));
}

#[test]
fn table_of_a_missing_directory_is_a_run_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = halfspace(&["table", &dir.path().join("absent").display().to_string()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn quick_lemma_panel_prints_a_passing_report() {
    let out = halfspace(&["lemmas", "--seed", "3", "--quick"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["seed"], 3);
    assert_eq!(report["deterministic_violations"], 0);
}

#[test]
fn help_exits_cleanly() {
    let out = halfspace(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("lemmas"));
}
