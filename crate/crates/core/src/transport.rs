//! Pressure and growth laws, the stabilized face fluxes, the explicit density
//! update and time-step selection.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{face_divergence, BoundaryCondition, FaceField, FaceVelocities, ScalarField};

/// Physical constants of the model: Brinkman viscosity `mu`, pressure law
/// `p = a n^gamma` and growth law `G(p) = alpha - beta p^theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    mu: f64,
    a: f64,
    gamma: f64,
    alpha: f64,
    beta: f64,
    theta: f64,
    homeostatic_pressure: f64,
    n_inf: f64,
    s_star: f64,
}

impl ModelParams {
    pub fn new(mu: f64, a: f64, gamma: f64, alpha: f64, beta: f64, theta: f64) -> Result<Self> {
        let positive = [("mu", mu), ("a", a), ("alpha", alpha), ("beta", beta), ("theta", theta)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if !(gamma >= 2.0 && gamma.is_finite()) {
            return Err(Error::InvalidParams(format!("gamma must be >= 2, got {gamma}")));
        }
        let homeostatic_pressure = (alpha / beta).powf(1.0 / theta);
        let n_inf = (homeostatic_pressure / a).powf(1.0 / gamma);
        let mut params = Self {
            mu,
            a,
            gamma,
            alpha,
            beta,
            theta,
            homeostatic_pressure,
            n_inf,
            s_star: 0.0,
        };
        params.s_star = params.maximize_density_growth();
        if !(params.s_star >= 0.0 && params.s_star.is_finite()) {
            return Err(Error::InvalidParams("sup of n G(p(n)) is not finite".into()));
        }
        Ok(params)
    }

    /// `p = n^gamma`, `G(p) = 1 - p`: the setting of the reference experiments.
    pub fn reference(mu: f64, gamma: f64) -> Result<Self> {
        Self::new(mu, 1.0, gamma, 1.0, 1.0, 1.0)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `P_M`, the root of `G`.
    pub fn homeostatic_pressure(&self) -> f64 {
        self.homeostatic_pressure
    }

    /// Density at homeostatic pressure, `(P_M / a)^(1/gamma)`.
    pub fn n_inf(&self) -> f64 {
        self.n_inf
    }

    /// `max_{s >= 0} G(s)`, attained at `s = 0`.
    pub fn g_sup(&self) -> f64 {
        self.alpha
    }

    /// `sup_{n >= 0} n G(p(n))`, i.e. `sup_s (s/a)^(1/gamma) G(s)`.
    pub fn s_star(&self) -> f64 {
        self.s_star
    }

    #[inline]
    pub fn pressure_of(&self, n: f64) -> f64 {
        self.a * n.abs().powf(self.gamma)
    }

    #[inline]
    pub fn growth_of(&self, p: f64) -> f64 {
        self.alpha - self.beta * p.powf(self.theta)
    }

    /// Density bound certified for one step of size `dt` from a state whose
    /// largest value is `current_max`.
    pub fn n_max(&self, dt: f64, current_max: f64) -> f64 {
        (self.n_inf + 4.0 * dt * self.s_star).max(current_max)
    }

    // The log-derivative 1/(gamma s) + G'(s)/G(s) is strictly decreasing on
    // (0, P_M), so the objective is unimodal there and negative beyond P_M.
    fn maximize_density_growth(&self) -> f64 {
        let objective = |s: f64| (s / self.a).powf(1.0 / self.gamma) * self.growth_of(s);
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (0.0, self.homeostatic_pressure);
        let mut c = hi - inv_phi * (hi - lo);
        let mut d = lo + inv_phi * (hi - lo);
        let (mut fc, mut fd) = (objective(c), objective(d));
        while hi - lo > 1e-12 * self.homeostatic_pressure.max(1.0) {
            if fc > fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - inv_phi * (hi - lo);
                fc = objective(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + inv_phi * (hi - lo);
                fd = objective(d);
            }
        }
        objective(0.5 * (lo + hi)).max(0.0)
    }
}

/// Cell-wise pressure `a |n|^gamma`.
pub fn pressure(n: &ScalarField, params: &ModelParams) -> ScalarField {
    n.map(|v| params.pressure_of(v))
}

/// Cell-wise growth rate `alpha - beta p^theta`.
pub fn growth(p: &ScalarField, params: &ModelParams) -> ScalarField {
    p.map(|v| params.growth_of(v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CflMode {
    /// Bound guaranteeing `0 <= n <= n_max`.
    StrictBounds,
    /// Tighter bound under which the summed `L^2` entropy inequality holds.
    StrictEntropy,
    /// `practical_number * h / max|grad W|`, no guarantees.
    PracticalLinear,
}

impl CflMode {
    pub fn is_strict(self) -> bool {
        !matches!(self, CflMode::PracticalLinear)
    }
}

impl fmt::Display for CflMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CflMode::StrictBounds => "strict_bounds",
            CflMode::StrictEntropy => "strict_entropy",
            CflMode::PracticalLinear => "practical_linear",
        })
    }
}

impl FromStr for CflMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "strict_bounds" => Ok(CflMode::StrictBounds),
            "strict_entropy" => Ok(CflMode::StrictEntropy),
            "practical_linear" => Ok(CflMode::PracticalLinear),
            other => Err(Error::Config(format!("unknown CFL mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflConfig {
    pub mode: CflMode,
    pub safety: f64,
    pub practical_number: f64,
    /// Optional hard cap on the step size.
    pub dt_max: Option<f64>,
}

impl Default for CflConfig {
    fn default() -> Self {
        Self {
            mode: CflMode::StrictBounds,
            safety: 0.9,
            practical_number: 0.45,
            dt_max: None,
        }
    }
}

impl CflConfig {
    pub fn strict(mode: CflMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(Error::Config(format!("cfl safety must lie in (0, 1], got {}", self.safety)));
        }
        if !(self.practical_number > 0.0 && self.practical_number.is_finite()) {
            return Err(Error::Config("cfl practical_number must be positive".into()));
        }
        if let Some(cap) = self.dt_max {
            if cap.is_nan() || cap <= 0.0 {
                return Err(Error::Config("cfl dt_max must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Velocities below this magnitude are treated as zero by the linear CFL rule.
pub const VELOCITY_FLOOR: f64 = 1e-12;

/// Unscaled step bound of a strict mode for velocity magnitude `max_velocity`
/// and density bound `n_max`. Returns infinity for [`CflMode::PracticalLinear`].
pub fn strict_dt_bound(mode: CflMode, max_velocity: f64, params: &ModelParams, h: f64, n_max: f64) -> f64 {
    let transport = h / (8.0 * max_velocity + h * params.g_sup());
    let compression = params.mu() / (4.0 * params.gamma() * params.a() * n_max.powf(params.gamma()));
    match mode {
        CflMode::PracticalLinear => f64::INFINITY,
        CflMode::StrictBounds => transport.min(compression),
        CflMode::StrictEntropy => {
            let dissipation = if max_velocity > 0.0 {
                h / (16.0 * max_velocity)
            } else {
                f64::INFINITY
            };
            // the reaction part of |D_t n|^2 only folds into the h-weighted
            // sum when 2 dt <= h
            transport.min(compression).min(dissipation).min(0.5 * h)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflStep {
    pub dt: f64,
    /// Density bound that holds after a step of size `dt` (certified in
    /// strict modes, informational otherwise).
    pub n_max: f64,
}

/// Picks the step size for the current velocities.
///
/// In strict modes the bound depends on `n_max`, which itself depends on the
/// step. The bound is evaluated at `n_max(dt_prev)` and the result is
/// re-certified against its own `n_max`, shrinking until consistent.
pub fn cfl_dt(
    vel: &FaceVelocities,
    params: &ModelParams,
    cfg: &CflConfig,
    dt_prev: f64,
    current_max: f64,
) -> CflStep {
    let h = vel.grid().h();
    let umax = vel.max_abs();
    let cap = cfg.dt_max.unwrap_or(f64::INFINITY);
    if !cfg.mode.is_strict() {
        let dt = (cfg.practical_number * h / umax.max(VELOCITY_FLOOR)).min(cap);
        return CflStep {
            dt,
            n_max: params.n_max(dt, current_max),
        };
    }
    if cap.is_finite() {
        let n_max = params.n_max(cap, current_max);
        if cap <= cfg.safety * strict_dt_bound(cfg.mode, umax, params, h, n_max) {
            return CflStep { dt: cap, n_max };
        }
    }
    let guess = params.n_max(dt_prev, current_max);
    let mut dt = (cfg.safety * strict_dt_bound(cfg.mode, umax, params, h, guess)).min(cap);
    loop {
        let n_max = params.n_max(dt, current_max);
        let bound = strict_dt_bound(cfg.mode, umax, params, h, n_max);
        if dt <= bound {
            return CflStep { dt, n_max };
        }
        dt = (cfg.safety * bound).min(0.5 * dt);
    }
}

/// Stabilized fluxes
/// `F1_{i+1/2,j} = -u (n_{i,j} + n_{i+1,j}) / 2 - (h/2) |u| D_1^+ n_{i,j}`
/// on every vertical face, and the analogue on horizontal faces.
pub fn numerical_fluxes(n: &ScalarField, vel: &FaceVelocities, bc: BoundaryCondition) -> FaceField {
    let h = n.grid().h();
    let flux = |vel: f64, left: f64, right: f64| {
        let grad = (right - left) / h;
        -vel * (left + right) / 2.0 - h / 2.0 * vel.abs() * grad
    };
    FaceField::from_fns(
        *n.grid(),
        |f, j| {
            let (f, j) = (f as isize, j as isize);
            flux(vel.x_face(f as usize, j as usize), n.ghost(f - 1, j, bc), n.ghost(f, j, bc))
        },
        |i, f| {
            let (i, f) = (i as isize, f as isize);
            flux(vel.y_face(i as usize, f as usize), n.ghost(i, f - 1, bc), n.ghost(i, f, bc))
        },
    )
}

/// One explicit step `n + dt (n G(p) - D_1^- F1 - D_2^- F2)`.
///
/// In strict modes a `dt` above the bound for this state is refused.
pub fn transport_step(
    n: &ScalarField,
    vel: &FaceVelocities,
    p: &ScalarField,
    dt: f64,
    params: &ModelParams,
    bc: BoundaryCondition,
    cfl: &CflConfig,
) -> Result<ScalarField> {
    if cfl.mode.is_strict() {
        let n_max = params.n_max(dt, n.max());
        let bound = strict_dt_bound(cfl.mode, vel.max_abs(), params, n.grid().h(), n_max);
        if dt > bound * (1.0 + 1e-12) {
            return Err(Error::CflViolation { dt, bound });
        }
    }
    let div = face_divergence(&numerical_fluxes(n, vel, bc));
    let mut next = n.clone();
    for ((out, &d), &pv) in next.values_mut().iter_mut().zip(div.values()).zip(p.values()) {
        let old = *out;
        *out = old - dt * d + dt * old * params.growth_of(pv);
    }
    if !next.is_finite() {
        return Err(Error::NonFiniteState { step: 0 });
    }
    Ok(next)
}

/// Coefficients of the update written as
/// `n' = (a1 + a2) n + beta n_E + zeta n_W + eta n_N + theta n_S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexCoefficients {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta: f64,
    pub zeta: f64,
    pub eta: f64,
    pub theta: f64,
}

impl ConvexCoefficients {
    pub fn at(vel: &FaceVelocities, p: &ScalarField, dt: f64, params: &ModelParams, i: usize, j: usize) -> Self {
        let h = vel.grid().h();
        let ue = vel.x_face(i + 1, j);
        let uw = vel.x_face(i, j);
        let vn = vel.y_face(i, j + 1);
        let vs = vel.y_face(i, j);
        let r = dt / (2.0 * h);
        Self {
            alpha1: 1.0 - r * ((ue.abs() + ue) + (uw.abs() - uw) + (vn.abs() + vn) + (vs.abs() - vs)),
            alpha2: dt * params.growth_of(p[(i, j)]) + dt / h * (ue - uw + vn - vs),
            beta: r * (ue + ue.abs()),
            zeta: r * (uw.abs() - uw),
            eta: r * (vn + vn.abs()),
            theta: r * (vs.abs() - vs),
        }
    }

    pub fn center(&self) -> f64 {
        self.alpha1 + self.alpha2
    }

    /// `alpha1 + beta + zeta + eta + theta`, which is one by construction.
    pub fn partition(&self) -> f64 {
        self.alpha1 + self.beta + self.zeta + self.eta + self.theta
    }

    pub fn is_convex(&self) -> bool {
        self.center() >= 0.0 && self.beta >= 0.0 && self.zeta >= 0.0 && self.eta >= 0.0 && self.theta >= 0.0
    }
}
