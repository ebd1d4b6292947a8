use std::fs;
use std::path::Path;

use heleshaw::sim::output::{frame_path, read_frame, DIAG_FILE, DIAG_HEADER, FAILURE_MARKER};
use heleshaw::sim::{init_state, reproduce, run, Figure, InitialData, SimConfig};
use heleshaw::transport::{CflConfig, CflMode, ModelParams};
use heleshaw::Error;

fn gaussian_config(dir: &Path) -> SimConfig {
    SimConfig {
        lo: -1.5,
        hi: 1.5,
        n_cells: 24,
        params: ModelParams::reference(1.0, 3.0).unwrap(),
        cfl: CflConfig::strict(CflMode::StrictEntropy),
        t_end: 0.3,
        output_every: 5,
        output_dir: Some(dir.to_path_buf()),
        init: InitialData::Gaussian2,
        ..SimConfig::default()
    }
}

#[test]
fn identical_configs_give_identical_diagnostics() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(&gaussian_config(a.path())).unwrap();
    run(&gaussian_config(b.path())).unwrap();
    let da = fs::read(a.path().join(DIAG_FILE)).unwrap();
    let db = fs::read(b.path().join(DIAG_FILE)).unwrap();
    assert!(!da.is_empty());
    assert_eq!(da, db);
}

#[test]
fn initial_frame_matches_initial_state_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = gaussian_config(dir.path());
    run(&cfg).unwrap();
    let state = init_state(&cfg).unwrap();
    for (name, field) in [("n", &state.n), ("W", &state.w), ("p", &state.p)] {
        let frame = read_frame(&frame_path(dir.path(), name, 0)).unwrap();
        assert_eq!(frame.t, 0.0);
        assert_eq!(frame.field, name);
        assert_eq!(frame.values, field.values());
    }
}

#[test]
fn diagnostics_have_one_row_per_step_and_frames_follow_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&gaussian_config(dir.path())).unwrap();
    let text = fs::read_to_string(dir.path().join(DIAG_FILE)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(DIAG_HEADER));
    let rows: Vec<&str> = lines.collect();
    let steps = out.diagnostics.records.len();
    assert_eq!(rows.len(), steps);
    for (k, row) in rows.iter().enumerate() {
        assert!(row.starts_with(&format!("{},", k + 1)));
    }
    for s in (0..=steps).filter(|s| s % 5 == 0).chain([steps]) {
        assert!(frame_path(dir.path(), "n", s).exists(), "missing frame {s}");
    }
    let last = read_frame(&frame_path(dir.path(), "n", steps)).unwrap();
    assert_eq!(last.t, 0.3);
    assert!(out.diagnostics.failures.is_empty());
}

#[test]
fn blow_up_leaves_last_good_frame_and_marker() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SimConfig {
        n_cells: 8,
        cfl: CflConfig::strict(CflMode::PracticalLinear),
        t_end: 1.0,
        output_every: 0,
        output_dir: Some(dir.path().to_path_buf()),
        init: InitialData::UniformValue(1e100),
        ..SimConfig::default()
    };
    let err = run(&cfg).unwrap_err();
    assert!(matches!(err, Error::NonFiniteState { step: 1 }), "{err}");
    assert!(err.is_numerical());
    assert!(dir.path().join(FAILURE_MARKER).exists());
    let frame = read_frame(&frame_path(dir.path(), "n", 0)).unwrap();
    assert!(frame.values.iter().all(|&v| v == 1e100));

    // a clean rerun clears the stale marker
    let ok = SimConfig {
        init: InitialData::UniformSteady,
        cfl: CflConfig::strict(CflMode::StrictBounds),
        t_end: 0.1,
        ..cfg
    };
    run(&ok).unwrap();
    assert!(!dir.path().join(FAILURE_MARKER).exists());
}

#[test]
fn figure_two_at_coarse_scale_writes_its_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let out = reproduce(Figure::Fig2, Some(dir.path()), 8).unwrap();
    assert!(out.diagnostics.failures.is_empty());
    let mut times: Vec<f64> = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| {
            let path = e.unwrap().path();
            let name = path.file_name()?.to_str()?.to_string();
            name.starts_with("n_").then(|| read_frame(&path).unwrap().t)
        })
        .collect();
    times.sort_by(f64::total_cmp);
    for t in Figure::Fig2.times() {
        assert!(times.contains(t), "no frame at t={t}: {times:?}");
    }
    assert_eq!(out.state.t, 6.0);
}
