use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use heleshaw::sim::output::{read_frame, DIAG_FILE, DIAG_HEADER};

fn heleshaw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heleshaw"))
        .args(args)
        .env_remove("HELESHAW_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn n_frames(dir: &Path) -> Vec<PathBuf> {
    let mut frames: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            let name = p.file_name().unwrap().to_str().unwrap();
            name.starts_with("n_") && name.ends_with(".csv")
        })
        .collect();
    frames.sort();
    frames
}

#[test]
fn run_with_config_writes_frames_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs_dir().join("gauss1.cfg");
    let o = heleshaw(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "n_cells=32",
        "--set",
        "t_end=0.3",
        "--set",
        "output_times=0.1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("failures: 0"));

    let frames = n_frames(dir.path());
    let times: Vec<f64> = frames.iter().map(|p| read_frame(p).unwrap().t).collect();
    assert_eq!(times, [0.0, 0.1, 0.3]);
    let first = read_frame(&frames[0]).unwrap();
    assert_eq!((first.nx, first.h), (32, 5.0 / 32.0));
    for field in ["W", "p"] {
        assert!(dir.path().join(format!("{field}_00000000.csv")).exists());
    }
    let diag = fs::read_to_string(dir.path().join(DIAG_FILE)).unwrap();
    assert_eq!(diag.lines().next(), Some(DIAG_HEADER));
    assert!(diag.lines().count() > 1);
}

#[test]
fn output_directory_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.cfg");
    fs::write(&cfg, "n_cells = 8\nt_end = 0.05\ninit = uniform(0.5)\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_heleshaw"))
        .args(["run", "--config", cfg.to_str().unwrap()])
        .env("HELESHAW_OUTPUT_DIR", dir.path().join("frames"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("frames").join(DIAG_FILE).exists());
}

#[test]
fn missing_config_is_a_usage_error() {
    let o = heleshaw(&["run", "--config", "/definitely/not/here.cfg"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage:"));

    let o = heleshaw(&["run"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--config"));
}

#[test]
fn bad_config_entries_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "n_cells = 8\nno_such_key = 1\n").unwrap();
    let o = heleshaw(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn zero_end_time_writes_a_single_frame() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs_dir().join("gauss2.cfg");
    let o = heleshaw(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "n_cells=16",
        "--set",
        "t_end=0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(n_frames(dir.path()).len(), 1);
    assert!(stdout(&o).contains("steps: 0"));
}

#[test]
fn blow_up_exits_with_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("blowup.cfg");
    fs::write(&cfg, "n_cells = 8\ncfl_mode = practical_linear\ninit = uniform(1e100)\n").unwrap();
    let out = dir.path().join("out");
    let o = heleshaw(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(out.join("FAILED").exists());
}

#[test]
fn verify_passes_with_default_seed() {
    let o = heleshaw(&["verify"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("dense_oracle"));
    assert!(out.contains("energy_identity"));
    assert!(out.lines().last().unwrap().ends_with(", 0 failed"));
}

#[test]
fn verify_detects_an_injected_fault() {
    let o = heleshaw(&["verify", "--inject-fault"]);
    assert!(!o.status.success());
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn verify_refuses_dense_oracle_beyond_32() {
    let o = heleshaw(&["verify", "--sizes", "48"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("refused"), "{}", stderr(&o));

    let o = heleshaw(&["verify", "--sizes", "48", "--no-oracle"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn reproduce_writes_the_four_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let o = heleshaw(&["reproduce", "fig1", "--scale", "4", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("h: 0.0625"));
    let times: Vec<f64> = n_frames(dir.path()).iter().map(|p| read_frame(p).unwrap().t).collect();
    assert_eq!(times, [0.0, 1.0, 2.0, 4.0]);
}

#[test]
fn reproduce_rejects_unknown_figures_and_scales() {
    let o = heleshaw(&["reproduce", "fig3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("fig3"));

    let o = heleshaw(&["reproduce", "fig1", "--scale", "7"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn converge_prints_a_table() {
    let cfg = configs_dir().join("gauss1.cfg");
    let o = heleshaw(&[
        "converge",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "n_cells=16",
        "--levels",
        "3",
        "--t-snapshot",
        "0.1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "n_cells,h,l1_difference,rate");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("16,"));
    assert!(lines[3].starts_with("64,"));
}
