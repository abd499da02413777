use std::path::{Path, PathBuf};
use std::process::Command;

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// Writes a toy config into `dir` and returns its path.
fn toy_config(dir: &Path, n_min: usize, n_max: usize, solver: &str) -> PathBuf {
    let text = format!(
        r#"{{
  "version": 1,
  "grid": {{"kind": "file", "path": {grid:?}}},
  "wind_rose": {rose:?},
  "n_min": {n_min},
  "n_max": {n_max},
  "solver": {{"kind": "{solver}"}},
  "output_dir": "out"
}}"#,
        grid = configs_dir().join("toy_grid.csv"),
        rose = data_dir().join("iea37_windrose.csv"),
    );
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn windtopo(args: &[&std::ffi::OsStr]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_windtopo"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn run_config(config: &Path) -> std::process::Output {
    windtopo(&["run".as_ref(), config.as_os_str()])
}

#[test]
fn toy_brute_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(&toy_config(dir.path(), 2, 6, "brute"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("turbines"), "{stdout}");
    for file in [
        "layout.csv",
        "result.json",
        "history.csv",
        "layout.svg",
        "density_histogram.svg",
        "flow.csv",
        "flow.svg",
    ] {
        assert!(dir.path().join("out").join(file).is_file(), "{file} missing");
    }
}

#[test]
fn inconsistent_bounds_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(&toy_config(dir.path(), 5, 3, "brute"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_min"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_config_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(&dir.path().join("absent.json"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_wind_rose_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = toy_config(dir.path(), 2, 6, "brute");
    let text = std::fs::read_to_string(&config)
        .unwrap()
        .replace("iea37_windrose.csv", "absent.csv");
    std::fs::write(&config, text).unwrap();
    assert_eq!(run_config(&config).status.code(), Some(2));
}

#[test]
fn malformed_json_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, "{\"version\": 1,").unwrap();
    assert_eq!(run_config(&config).status.code(), Some(2));
}

#[test]
fn infeasible_problem_exit_3_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    // all eight sites cannot be used at once
    let out = run_config(&toy_config(dir.path(), 8, 8, "brute"));
    assert_eq!(out.status.code(), Some(3));
    let leftovers: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|name| name != "config.json")
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn unknown_arguments_exit_2() {
    assert_eq!(windtopo(&["frobnicate".as_ref()]).status.code(), Some(2));
    assert_eq!(windtopo(&[]).status.code(), Some(2));
}

#[test]
fn out_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = toy_config(dir.path(), 2, 6, "brute");
    let target = dir.path().join("elsewhere");
    let out = windtopo(&["run".as_ref(), config.as_os_str(), "--out".as_ref(), target.as_os_str()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("result.json").is_file());
    assert!(!dir.path().join("out").exists());
}
