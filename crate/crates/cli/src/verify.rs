//! `verify`: oracle comparisons and invariant checks on seeded random inputs.

use clap::Args;
use heleshaw::brinkman::{solve_brinkman, solve_brinkman_dense, EllipticSolverConfig};
use heleshaw::grid::{BoundaryCondition, GridSpec, ScalarField};
use heleshaw::invariants::{check_energy_identity, check_potential_bounds, InvariantReport};
use heleshaw::sim::{advance, init_state, InitialData, SimConfig};
use heleshaw::transport::{CflConfig, CflMode, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Failure;

/// Largest grid the dense oracle is run on.
pub const ORACLE_LIMIT: usize = 32;
const ORACLE_TOL: f64 = 1e-10;

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cells per axis, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = [8usize, 16, 32])]
    sizes: Vec<usize>,
    /// Skip the dense direct-solver comparison
    #[arg(long)]
    no_oracle: bool,
    /// Perturb the iterative solution before checking it
    #[arg(long, hide = true)]
    inject_fault: bool,
}

struct Row {
    check: String,
    size: usize,
    bc: BoundaryCondition,
    residual: f64,
    tolerance: f64,
    pass: bool,
}

impl Row {
    fn from_report(r: &InvariantReport, size: usize, bc: BoundaryCondition) -> Self {
        Self {
            check: r.name.to_string(),
            size,
            bc,
            residual: r.residual,
            tolerance: r.tolerance,
            pass: !r.failed(),
        }
    }
}

pub fn run(args: &VerifyArgs) -> Result<(), Failure> {
    if args.sizes.is_empty() || args.sizes.iter().any(|&n| n < 4) {
        return Err(Failure::Usage("sizes must be at least 4".into()));
    }
    if !args.no_oracle {
        if let Some(n) = args.sizes.iter().find(|&&n| n > ORACLE_LIMIT) {
            return Err(Failure::Usage(format!(
                "dense oracle refused for size {n}: limit is {ORACLE_LIMIT} (use --no-oracle)"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut rows = Vec::new();
    for &size in &args.sizes {
        for bc in [BoundaryCondition::Neumann, BoundaryCondition::Periodic] {
            elliptic_checks(args, size, bc, &mut rng, &mut rows)?;
            evolution_checks(size, bc, &mut rng, &mut rows)?;
        }
    }
    println!("{:<18} {:>4} {:<8} {:>12} {:>10}  result", "check", "size", "bc", "residual", "tolerance");
    for r in &rows {
        println!(
            "{:<18} {:>4} {:<8} {:>12.3e} {:>10.1e}  {}",
            r.check,
            r.size,
            r.bc.to_string(),
            r.residual,
            r.tolerance,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    println!("{} checks, {failed} failed", rows.len());
    if failed > 0 {
        return Err(Failure::Numerical(format!("{failed} verification checks failed")));
    }
    Ok(())
}

fn elliptic_checks(
    args: &VerifyArgs,
    size: usize,
    bc: BoundaryCondition,
    rng: &mut ChaCha8Rng,
    rows: &mut Vec<Row>,
) -> Result<(), Failure> {
    let grid = GridSpec::new(0.0, 1.0, size)?;
    let mu = 10f64.powf(rng.gen_range(-1.0..1.0));
    let p = ScalarField::from_fn(grid, |_, _| rng.gen_range(0.0..1.0));
    let mut sol = solve_brinkman(&p, mu, bc, &EllipticSolverConfig::default())?;
    if args.inject_fault {
        let k = rng.gen_range(0..grid.len());
        sol.w.values_mut()[k] += 1e-3;
    }
    if !args.no_oracle {
        let dense = solve_brinkman_dense(&p, mu, bc)?;
        let diff = sol.w.zip_map(&dense, |a, b| a - b).max_abs();
        rows.push(Row {
            check: "dense_oracle".into(),
            size,
            bc,
            residual: diff,
            tolerance: ORACLE_TOL,
            pass: diff <= ORACLE_TOL,
        });
    }
    let potential = check_potential_bounds(&sol.w, &p, sol.final_residual);
    rows.push(Row::from_report(&potential, size, bc));
    if bc == BoundaryCondition::Periodic {
        rows.push(Row::from_report(&check_energy_identity(&sol.w, &p, mu, bc), size, bc));
    }
    Ok(())
}

fn evolution_checks(size: usize, bc: BoundaryCondition, rng: &mut ChaCha8Rng, rows: &mut Vec<Row>) -> Result<(), Failure> {
    let terms: Vec<String> = (0..2)
        .map(|_| {
            let amp = rng.gen_range(0.05..0.45);
            let k = rng.gen_range(3.0..20.0);
            let (cx, cy) = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
            format!("{amp}*exp(-{k}*((x-({cx}))^2+(y-({cy}))^2))")
        })
        .collect();
    let cfg = SimConfig {
        lo: -1.0,
        hi: 1.0,
        n_cells: size,
        bc,
        params: ModelParams::reference(rng.gen_range(0.2..5.0), 3.0)?,
        cfl: CflConfig::strict(CflMode::StrictEntropy),
        t_end: 100.0,
        init: InitialData::Custom(terms.join("+")),
        ..SimConfig::default()
    };
    let mut state = init_state(&cfg)?;
    let mut worst: Vec<InvariantReport> = Vec::new();
    for _ in 0..20 {
        let out = advance(&state, &cfg, cfg.t_end)?;
        for r in out.reports {
            match worst.iter_mut().find(|w| w.name == r.name) {
                Some(w) if (r.failed(), r.residual) > (w.failed(), w.residual) => *w = r,
                Some(_) => {}
                None => worst.push(r),
            }
        }
        state = out.state;
    }
    rows.extend(worst.iter().map(|r| Row::from_report(r, size, bc)));

    let steady_cfg = SimConfig {
        init: InitialData::UniformSteady,
        ..cfg
    };
    let initial = init_state(&steady_cfg)?;
    let mut steady = initial.clone();
    for _ in 0..20 {
        steady = advance(&steady, &steady_cfg, steady_cfg.t_end)?.state;
    }
    let change = steady.n.zip_map(&initial.n, |a, b| a - b).max_abs();
    rows.push(Row {
        check: "steady_state".into(),
        size,
        bc,
        residual: change,
        tolerance: 1e-12,
        pass: change <= 1e-12,
    });
    Ok(())
}
