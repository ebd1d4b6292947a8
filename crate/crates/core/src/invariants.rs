//! Checkers for the discrete a-priori estimates of the scheme.
//!
//! Every checker is a pure function of its inputs and sums in row-major
//! order, so a report is reproducible bit for bit. The residual is a signed
//! margin: values at or below the recorded tolerance mean the estimate holds.

use std::fmt;

use crate::grid::{diff_minus, diff_plus, laplacian, Axis, BoundaryCondition, ScalarField};
use crate::transport::ModelParams;

/// Tolerance for identities that are exact in exact arithmetic.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance where an elliptic solve enters the chain.
pub const SOLVER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    pub name: &'static str,
    pub outcome: Outcome,
    pub residual: f64,
    pub tolerance: f64,
    /// Cell of the worst violation, when the check is cell-local.
    pub location: Option<(usize, usize)>,
}

impl InvariantReport {
    fn judge(name: &'static str, residual: f64, tolerance: f64, location: Option<(usize, usize)>) -> Self {
        let outcome = if residual <= tolerance {
            Outcome::Pass
        } else {
            Outcome::Fail
        };
        Self {
            name,
            outcome,
            residual,
            tolerance,
            location,
        }
    }

    fn not_applicable(name: &'static str) -> Self {
        Self {
            name,
            outcome: Outcome::NotApplicable,
            residual: 0.0,
            tolerance: 0.0,
            location: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }

    pub fn failed(&self) -> bool {
        self.outcome == Outcome::Fail
    }
}

impl fmt::Display for InvariantReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match self.outcome {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::NotApplicable => "N/A ",
        };
        write!(f, "{status} {:<18} residual={:+.3e} tol={:.1e}", self.name, self.residual, self.tolerance)?;
        if let Some((i, j)) = self.location {
            write!(f, " at ({i},{j})")?;
        }
        Ok(())
    }
}

/// `0 <= n <= n_max`; residual `max(-min n, max n - n_max)`.
pub fn check_density_bounds(n: &ScalarField, n_max: f64) -> InvariantReport {
    let below = -n.min();
    let above = n.max() - n_max;
    let (residual, location) = if below >= above {
        (below, n.argmin())
    } else {
        (above, n.argmax())
    };
    InvariantReport::judge("density_bounds", residual, EXACT_TOL, Some(location))
}

/// `min p <= W <= max p` up to `allowance`, typically the absolute residual
/// norm of the elliptic solve (the operator has smallest eigenvalue 1).
pub fn check_potential_bounds(w: &ScalarField, p: &ScalarField, allowance: f64) -> InvariantReport {
    let below = p.min() - w.min();
    let above = w.max() - p.max();
    let (margin, location) = if below >= above {
        (below, w.argmin())
    } else {
        (above, w.argmax())
    };
    InvariantReport::judge("potential_bounds", margin - allowance, EXACT_TOL, Some(location))
}

/// Relative defect of `h^2 sum n_new = h^2 sum n_old + dt h^2 sum n_old G(p_old)`.
pub fn check_mass_balance(
    n_old: &ScalarField,
    n_new: &ScalarField,
    p_old: &ScalarField,
    dt: f64,
    params: &ModelParams,
) -> InvariantReport {
    let area = n_old.grid().cell_area();
    let old = area * n_old.sum();
    let new = area * n_new.sum();
    let source: f64 = n_old
        .values()
        .iter()
        .zip(p_old.values())
        .map(|(&n, &p)| n * params.growth_of(p))
        .sum::<f64>()
        * area;
    let scale = old.abs().max(area * n_old.max_abs()).max(f64::MIN_POSITIVE);
    let residual = (new - old - dt * source).abs() / scale;
    InvariantReport::judge("mass_balance", residual, EXACT_TOL, None)
}

/// Summed `L^2` entropy inequality
/// `h^2 D_t sum n^2 <= h^2 sum n^2 (Lap W + 2 G) + h^3 sum |n Lap W + n G|^2`.
///
/// The residual is `(lhs - rhs) / scale`, where `scale` is the largest
/// magnitude among the individual terms.
pub fn check_entropy_l2(
    n_old: &ScalarField,
    n_new: &ScalarField,
    w_old: &ScalarField,
    p_old: &ScalarField,
    dt: f64,
    params: &ModelParams,
    bc: BoundaryCondition,
) -> InvariantReport {
    let h = n_old.grid().h();
    let area = h * h;
    let lap = laplacian(w_old, bc);
    let mut sq_old = 0.0;
    let mut sq_new = 0.0;
    let mut source = 0.0;
    let mut source_abs = 0.0;
    let mut reaction = 0.0;
    for k in 0..n_old.values().len() {
        let n = n_old.values()[k];
        let g = params.growth_of(p_old.values()[k]);
        let l = lap.values()[k];
        sq_old += n * n;
        sq_new += n_new.values()[k] * n_new.values()[k];
        source += n * n * (l + 2.0 * g);
        source_abs += n * n * (l.abs() + 2.0 * g.abs());
        let y = n * l + n * g;
        reaction += y * y;
    }
    let lhs = area * (sq_new - sq_old) / dt;
    let rhs = area * source + area * h * reaction;
    let scale = (area * (sq_new + sq_old) / dt)
        .max(area * source_abs)
        .max(area * h * reaction)
        .max(f64::MIN_POSITIVE);
    InvariantReport::judge("entropy_l2", (lhs - rhs) / scale, SOLVER_TOL, None)
}

/// Terms of the periodic energy identity
/// `mu^2 |D^- D^+ W|^2 + 2 mu |D^+ W|^2 + |W|^2 = |p|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyTerms {
    pub hessian: f64,
    pub gradient: f64,
    pub potential: f64,
    pub pressure: f64,
}

impl EnergyTerms {
    pub fn compute(w: &ScalarField, p: &ScalarField, bc: BoundaryCondition) -> Self {
        let sq = |f: &ScalarField| f.dot(f);
        let mut hessian = 0.0;
        let mut gradient = 0.0;
        for l in [Axis::X, Axis::Y] {
            let g = diff_plus(w, l, bc);
            gradient += sq(&g);
            for k in [Axis::X, Axis::Y] {
                hessian += sq(&diff_minus(&g, k, bc));
            }
        }
        Self {
            hessian,
            gradient,
            potential: sq(w),
            pressure: sq(p),
        }
    }

    pub fn lhs(&self, mu: f64) -> f64 {
        mu * mu * self.hessian + 2.0 * mu * self.gradient + self.potential
    }
}

/// Energy identity of the Brinkman solve; only exact under periodic
/// conditions, reported as not applicable otherwise.
pub fn check_energy_identity(w: &ScalarField, p: &ScalarField, mu: f64, bc: BoundaryCondition) -> InvariantReport {
    const NAME: &str = "energy_identity";
    if bc != BoundaryCondition::Periodic {
        return InvariantReport::not_applicable(NAME);
    }
    let terms = EnergyTerms::compute(w, p, bc);
    let residual = (terms.lhs(mu) - terms.pressure).abs() / terms.pressure.max(f64::MIN_POSITIVE);
    InvariantReport::judge(NAME, residual, SOLVER_TOL, None)
}
