//! Time stepping, diagnostics and file output.

mod config;
mod convergence;
pub mod expr;
mod figures;
pub mod output;

use std::fs;
use std::path::Path;

use log::{debug, warn};

pub use config::{InitialData, SimConfig, CONFIG_KEYS};
pub use convergence::{convergence_study, ConvergenceRow};
pub use figures::{reproduce, Figure, REFERENCE_CELLS};

use crate::brinkman::{face_velocities, solve_brinkman, solve_brinkman_from};
use crate::error::{Error, Result};
use crate::grid::{cell_average_init, ScalarField};
use crate::invariants::{
    check_density_bounds, check_entropy_l2, check_mass_balance, check_potential_bounds, InvariantReport,
};
use crate::transport::{cfl_dt, pressure, transport_step, CflMode};

use output::{write_frame, DiagWriter, FAILURE_MARKER};

/// Snapshot of the discrete state at one time level. `w` always solves the
/// Brinkman equation for `p`, and `p` is the pressure of `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub step: usize,
    pub n: ScalarField,
    pub w: ScalarField,
    pub p: ScalarField,
    pub last_dt: f64,
    pub last_n_max: f64,
    pub cg_iterations: usize,
}

/// Per-step diagnostics; residuals follow the sign convention of
/// [`InvariantReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub mass: f64,
    pub min_n: f64,
    pub max_n: f64,
    pub max_w: f64,
    pub cg_iterations: usize,
    pub mass_residual: f64,
    pub entropy_residual: f64,
    pub bounds_residual: f64,
    pub potential_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantFailure {
    pub step: usize,
    pub report: InvariantReport,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub records: Vec<StepRecord>,
    /// Violations of estimates that the CFL mode guarantees.
    pub failures: Vec<InvariantFailure>,
    /// Violations in modes that give no guarantee.
    pub warnings: Vec<InvariantFailure>,
}

/// Result of advancing one step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: SimState,
    pub record: StepRecord,
    pub reports: Vec<InvariantReport>,
}

/// Cell-averaged initial density with its pressure and potential.
pub fn init_state(cfg: &SimConfig) -> Result<SimState> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let f = cfg.init.evaluator(&cfg.params)?;
    let n = cell_average_init(f, grid, cfg.quadrature)?;
    let p = pressure(&n, &cfg.params);
    let sol = solve_brinkman(&p, cfg.params.mu(), cfg.bc, &cfg.elliptic)?;
    Ok(SimState {
        t: 0.0,
        step: 0,
        last_n_max: cfg.params.n_max(0.0, n.max()),
        n,
        w: sol.w,
        p,
        last_dt: grid.h(),
        cg_iterations: sol.iterations,
    })
}

/// Advances one step, never past `t_stop`.
pub fn advance(state: &SimState, cfg: &SimConfig, t_stop: f64) -> Result<StepOutcome> {
    let params = &cfg.params;
    let vel = face_velocities(&state.w, cfg.bc);
    let current_max = state.n.max();
    let cfl = cfl_dt(&vel, params, &cfg.cfl, state.last_dt, current_max);
    let remaining = t_stop - state.t;
    let (dt, t_next) = if cfl.dt >= remaining {
        (remaining, t_stop)
    } else {
        (cfl.dt, state.t + cfl.dt)
    };
    let n_max = params.n_max(dt, current_max);
    let step = state.step + 1;

    let n = transport_step(&state.n, &vel, &state.p, dt, params, cfg.bc, &cfg.cfl).map_err(|e| match e {
        Error::NonFiniteState { .. } => Error::NonFiniteState { step },
        other => other,
    })?;
    let p = pressure(&n, params);
    let sol = solve_brinkman_from(&p, params.mu(), cfg.bc, &cfg.elliptic, &state.w)?;

    let mass = check_mass_balance(&state.n, &n, &state.p, dt, params);
    let entropy = check_entropy_l2(&state.n, &n, &state.w, &state.p, dt, params, cfg.bc);
    let bounds = check_density_bounds(&n, n_max);
    let potential = check_potential_bounds(&sol.w, &p, sol.final_residual);

    let record = StepRecord {
        step,
        t: t_next,
        dt,
        mass: n.integral(),
        min_n: n.min(),
        max_n: n.max(),
        max_w: sol.w.max(),
        cg_iterations: sol.iterations,
        mass_residual: mass.residual,
        entropy_residual: entropy.residual,
        bounds_residual: bounds.residual,
        potential_residual: potential.residual,
    };
    let next = SimState {
        t: t_next,
        step,
        n,
        w: sol.w,
        p,
        last_dt: dt,
        last_n_max: n_max,
        cg_iterations: sol.iterations,
    };
    Ok(StepOutcome {
        state: next,
        record,
        reports: vec![mass, entropy, bounds, potential],
    })
}

/// One step toward `cfg.t_end`.
pub fn step(state: &SimState, cfg: &SimConfig) -> Result<SimState> {
    Ok(advance(state, cfg, cfg.t_end)?.state)
}

/// Which reports the configured CFL mode guarantees.
fn guaranteed(mode: CflMode, report: &InvariantReport) -> bool {
    match mode {
        CflMode::PracticalLinear => false,
        CflMode::StrictBounds => report.name != "entropy_l2",
        CflMode::StrictEntropy => true,
    }
}

fn triage(cfg: &SimConfig, step: usize, reports: Vec<InvariantReport>, diag: &mut Diagnostics) {
    if !cfg.check_invariants {
        return;
    }
    for report in reports.into_iter().filter(InvariantReport::failed) {
        if guaranteed(cfg.cfl.mode, &report) {
            warn!("step {step}: invariant violated: {report}");
            diag.failures.push(InvariantFailure { step, report });
        } else if cfg.cfl.mode == CflMode::PracticalLinear {
            debug!("step {step}: unguaranteed estimate violated: {report}");
            diag.warnings.push(InvariantFailure { step, report });
        }
    }
}

struct FrameSink<'a> {
    dir: Option<&'a Path>,
    diag: Option<DiagWriter>,
}

impl<'a> FrameSink<'a> {
    fn new(dir: Option<&'a Path>) -> Result<Self> {
        let diag = match dir {
            Some(d) => {
                fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
                let stale = d.join(FAILURE_MARKER);
                if stale.exists() {
                    fs::remove_file(&stale).map_err(|e| Error::io(&stale, e))?;
                }
                Some(DiagWriter::create(d)?)
            }
            None => None,
        };
        Ok(Self { dir, diag })
    }

    fn frame(&self, state: &SimState) -> Result<()> {
        if let Some(dir) = self.dir {
            write_frame(dir, "n", state.step, state.t, &state.n)?;
            write_frame(dir, "W", state.step, state.t, &state.w)?;
            write_frame(dir, "p", state.step, state.t, &state.p)?;
        }
        Ok(())
    }

    fn record(&mut self, r: &StepRecord) -> Result<()> {
        match &mut self.diag {
            Some(w) => w.record(r),
            None => Ok(()),
        }
    }

    fn fail(&self, last_good: &SimState, err: &Error) -> Result<()> {
        if let Some(dir) = self.dir {
            self.frame(last_good)?;
            let marker = dir.join(FAILURE_MARKER);
            let msg = format!("step {} t={}: {err}\n", last_good.step + 1, last_good.t);
            fs::write(&marker, msg).map_err(|e| Error::io(&marker, e))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: SimState,
    pub diagnostics: Diagnostics,
}

/// Runs from the initial data to `t_end`, landing exactly on every entry of
/// `output_times` and on `t_end`. Frames go to `output_dir` when set.
pub fn run(cfg: &SimConfig) -> Result<RunOutput> {
    let initial = init_state(cfg)?;
    run_from(initial, cfg)
}

pub fn run_from(initial: SimState, cfg: &SimConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let mut sink = FrameSink::new(cfg.output_dir.as_deref())?;
    let mut stops: Vec<f64> = cfg
        .output_times
        .iter()
        .copied()
        .filter(|&t| t > initial.t && t < cfg.t_end)
        .collect();
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    stops.push(cfg.t_end);

    let mut state = initial;
    let mut diag = Diagnostics::default();
    sink.frame(&state)?;

    for stop in stops {
        while state.t < stop {
            let outcome = match advance(&state, cfg, stop) {
                Ok(o) => o,
                Err(e) => {
                    sink.fail(&state, &e)?;
                    return Err(e);
                }
            };
            sink.record(&outcome.record)?;
            triage(cfg, outcome.record.step, outcome.reports, &mut diag);
            diag.records.push(outcome.record);
            state = outcome.state;
            let scheduled = cfg.output_every > 0 && state.step.is_multiple_of(cfg.output_every);
            let landed = state.t == stop;
            if scheduled || landed {
                sink.frame(&state)?;
            }
        }
    }
    Ok(RunOutput {
        state,
        diagnostics: diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoundaryCondition;
    use crate::transport::{CflConfig, ModelParams};

    fn small(init: InitialData) -> SimConfig {
        SimConfig {
            lo: -1.0,
            hi: 1.0,
            n_cells: 16,
            init,
            t_end: 0.2,
            ..SimConfig::default()
        }
    }

    #[test]
    fn steady_state_is_preserved() {
        let cfg = small(InitialData::UniformSteady);
        let s0 = init_state(&cfg).unwrap();
        let s1 = step(&s0, &cfg).unwrap();
        assert_eq!(s1.n, s0.n);
        assert!(s1.t > 0.0);
        assert_eq!(s1.step, 1);
    }

    #[test]
    fn uniform_half_matches_update_formula() {
        let cfg = small(InitialData::UniformValue(0.5));
        let s0 = init_state(&cfg).unwrap();
        let out = advance(&s0, &cfg, cfg.t_end).unwrap();
        let expected = 0.5 * (1.0 + out.record.dt * 0.875);
        assert!(out.state.n.values().iter().all(|&v| (v - expected).abs() < 1e-15));
        assert_eq!(out.state.p, pressure(&out.state.n, &cfg.params));
    }

    #[test]
    fn run_lands_on_t_end_and_output_times() {
        let mut cfg = small(InitialData::Gaussian1);
        cfg.output_times = vec![0.05, 0.1];
        let out = run(&cfg).unwrap();
        assert_eq!(out.state.t, 0.2);
        let times: Vec<f64> = out.diagnostics.records.iter().map(|r| r.t).collect();
        assert!(times.contains(&0.05) && times.contains(&0.1));
        assert!(times.windows(2).all(|w| w[0] < w[1]));
        assert!(out.diagnostics.failures.is_empty(), "{:?}", out.diagnostics.failures);
    }

    #[test]
    fn zero_end_time_takes_no_steps() {
        let mut cfg = small(InitialData::Gaussian1);
        cfg.t_end = 0.0;
        let out = run(&cfg).unwrap();
        assert!(out.diagnostics.records.is_empty());
        assert_eq!(out.state, init_state(&cfg).unwrap());
    }

    #[test]
    fn practical_mode_downgrades_failures_to_warnings() {
        let mut cfg = small(InitialData::Gaussian1);
        cfg.bc = BoundaryCondition::Periodic;
        cfg.params = ModelParams::reference(1.0, 3.0).unwrap();
        cfg.cfl = CflConfig {
            mode: CflMode::PracticalLinear,
            practical_number: 0.45,
            dt_max: Some(0.2),
            ..CflConfig::default()
        };
        let out = run(&cfg).unwrap();
        assert!(out.diagnostics.failures.is_empty());
    }
}
