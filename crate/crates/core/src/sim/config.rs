//! Run configuration and its `key = value` file format.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::brinkman::EllipticSolverConfig;
use crate::error::{Error, Result};
use crate::grid::{BoundaryCondition, GridSpec, Quadrature};
use crate::transport::{CflConfig, CflMode, ModelParams};

use super::expr::Expr;

/// Initial density profiles.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// `0.5 exp(-10 |x|^2)`.
    Gaussian1,
    /// Two pulses centered at `(0.7, 0)` and `(-0.6, 0.2)`.
    Gaussian2,
    UniformValue(f64),
    /// Uniform at the homeostatic density of the configured parameters.
    UniformSteady,
    /// Closed-form expression in `x` and `y`.
    Custom(String),
}

impl InitialData {
    /// Point evaluator for this profile.
    pub fn evaluator(&self, params: &ModelParams) -> Result<Box<dyn Fn(f64, f64) -> f64>> {
        Ok(match self {
            InitialData::Gaussian1 => Box::new(|x: f64, y: f64| 0.5 * (-10.0 * (x * x + y * y)).exp()),
            InitialData::Gaussian2 => Box::new(|x: f64, y: f64| {
                0.5 * (-10.0 * ((x - 0.7).powi(2) + y * y)).exp()
                    + 0.5 * (-20.0 * ((x + 0.6).powi(2) + (y - 0.2).powi(2))).exp()
            }),
            InitialData::UniformValue(c) => {
                let c = *c;
                Box::new(move |_, _| c)
            }
            InitialData::UniformSteady => {
                let c = params.n_inf();
                Box::new(move |_, _| c)
            }
            InitialData::Custom(src) => {
                let expr = Expr::parse(src)?;
                Box::new(move |x, y| expr.eval(x, y))
            }
        })
    }
}

impl fmt::Display for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialData::Gaussian1 => f.write_str("gaussian1"),
            InitialData::Gaussian2 => f.write_str("gaussian2"),
            InitialData::UniformValue(c) => write!(f, "uniform({c})"),
            InitialData::UniformSteady => f.write_str("uniform(n_inf)"),
            InitialData::Custom(src) => write!(f, "custom({src})"),
        }
    }
}

fn strip_call<'a>(s: &'a str, name: &str) -> Option<&'a str> {
    s.strip_prefix(name)?.trim_start().strip_prefix('(')?.strip_suffix(')')
}

impl FromStr for InitialData {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "gaussian1" => return Ok(InitialData::Gaussian1),
            "gaussian2" => return Ok(InitialData::Gaussian2),
            _ => {}
        }
        if let Some(arg) = strip_call(s, "uniform") {
            let arg = arg.trim();
            if arg == "n_inf" {
                return Ok(InitialData::UniformSteady);
            }
            let c: f64 = parse_value("init", arg)?;
            if !c.is_finite() {
                return Err(Error::Config(format!("uniform value must be finite, got {c}")));
            }
            return Ok(InitialData::UniformValue(c));
        }
        if let Some(arg) = strip_call(s, "custom") {
            return Ok(InitialData::Custom(arg.trim().to_string()));
        }
        Err(Error::Config(format!("unknown initial data `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub lo: f64,
    pub hi: f64,
    pub n_cells: usize,
    pub bc: BoundaryCondition,
    pub params: ModelParams,
    pub cfl: CflConfig,
    pub elliptic: EllipticSolverConfig,
    pub t_end: f64,
    /// Write a frame every this many steps; 0 writes only the first and last.
    pub output_every: usize,
    /// Times at which the run lands exactly and writes a frame.
    pub output_times: Vec<f64>,
    pub output_dir: Option<PathBuf>,
    pub init: InitialData,
    pub quadrature: Quadrature,
    pub check_invariants: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            lo: -2.5,
            hi: 2.5,
            n_cells: 80,
            bc: BoundaryCondition::Neumann,
            params: ModelParams::reference(1.0, 3.0).expect("reference parameters are valid"),
            cfl: CflConfig::default(),
            elliptic: EllipticSolverConfig::default(),
            t_end: 1.0,
            output_every: 0,
            output_times: Vec::new(),
            output_dir: None,
            init: InitialData::Gaussian1,
            quadrature: Quadrature::Gauss2x2,
            check_invariants: true,
        }
    }
}

/// Keys accepted by [`SimConfig::set`], in the order they are documented.
pub const CONFIG_KEYS: &[&str] = &[
    "lo",
    "hi",
    "n_cells",
    "bc",
    "mu",
    "a",
    "gamma",
    "alpha",
    "beta",
    "theta",
    "cfl_mode",
    "cfl_safety",
    "cfl_practical_number",
    "cfl_dt_max",
    "elliptic_rel_tolerance",
    "elliptic_max_iterations",
    "t_end",
    "output_every",
    "output_times",
    "output_dir",
    "init",
    "quadrature",
    "check_invariants",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean `{value}` for `{key}`"))),
    }
}

fn is_none(value: &str) -> bool {
    matches!(value.trim().to_ascii_lowercase().as_str(), "" | "none")
}

impl SimConfig {
    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.lo, self.hi, self.n_cells)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if self.n_cells < 4 {
            return Err(Error::Config(format!("n_cells must be >= 4, got {}", self.n_cells)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be finite and >= 0, got {}", self.t_end)));
        }
        if self.output_times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::Config("output_times must be finite and >= 0".into()));
        }
        self.cfl.validate()?;
        self.elliptic.validate()?;
        if let InitialData::UniformValue(c) = self.init {
            if !c.is_finite() {
                return Err(Error::Config("uniform initial value must be finite".into()));
            }
        }
        Ok(())
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        let value = value.trim();
        let p = self.params;
        let (mut mu, mut a, mut gamma, mut alpha, mut beta, mut theta) =
            (p.mu(), p.a(), p.gamma(), p.alpha(), p.beta(), p.theta());
        match key {
            "lo" => self.lo = parse_value(key, value)?,
            "hi" => self.hi = parse_value(key, value)?,
            "n_cells" => self.n_cells = parse_value(key, value)?,
            "bc" => self.bc = value.parse()?,
            "mu" => mu = parse_value(key, value)?,
            "a" => a = parse_value(key, value)?,
            "gamma" => gamma = parse_value(key, value)?,
            "alpha" => alpha = parse_value(key, value)?,
            "beta" => beta = parse_value(key, value)?,
            "theta" => theta = parse_value(key, value)?,
            "cfl_mode" => self.cfl.mode = value.parse::<CflMode>()?,
            "cfl_safety" => self.cfl.safety = parse_value(key, value)?,
            "cfl_practical_number" => self.cfl.practical_number = parse_value(key, value)?,
            "cfl_dt_max" => {
                self.cfl.dt_max = if is_none(value) {
                    None
                } else {
                    Some(parse_value(key, value)?)
                }
            }
            "elliptic_rel_tolerance" => self.elliptic.rel_tolerance = parse_value(key, value)?,
            "elliptic_max_iterations" => {
                self.elliptic.max_iterations = if is_none(value) {
                    None
                } else {
                    Some(parse_value(key, value)?)
                }
            }
            "t_end" => self.t_end = parse_value(key, value)?,
            "output_every" => self.output_every = parse_value(key, value)?,
            "output_times" => {
                self.output_times = if is_none(value) {
                    Vec::new()
                } else {
                    value
                        .split(',')
                        .map(|t| parse_value(key, t))
                        .collect::<Result<Vec<f64>>>()?
                }
            }
            "output_dir" => {
                self.output_dir = if is_none(value) {
                    None
                } else {
                    Some(PathBuf::from(value))
                }
            }
            "init" => self.init = value.parse()?,
            "quadrature" => {
                self.quadrature = match value.to_ascii_lowercase().as_str() {
                    "gauss" | "gauss2x2" => Quadrature::Gauss2x2,
                    "midpoint" => Quadrature::Midpoint,
                    _ => return Err(Error::Config(format!("unknown quadrature `{value}`"))),
                }
            }
            "check_invariants" => self.check_invariants = parse_bool(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        if matches!(key, "mu" | "a" | "gamma" | "alpha" | "beta" | "theta") {
            self.params = ModelParams::new(mu, a, gamma, alpha, beta, theta)?;
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
        self.set(key, value)
    }

    /// Parses `key = value` lines on top of the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(k) => &raw[..k],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            cfg.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Serializes back to the file format; `parse(to_config_string())`
    /// reproduces the configuration.
    pub fn to_config_string(&self) -> String {
        let p = &self.params;
        let opt = |v: Option<String>| v.unwrap_or_else(|| "none".into());
        let times = if self.output_times.is_empty() {
            "none".to_string()
        } else {
            self.output_times.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",")
        };
        let lines = [
            ("lo", self.lo.to_string()),
            ("hi", self.hi.to_string()),
            ("n_cells", self.n_cells.to_string()),
            ("bc", self.bc.to_string()),
            ("mu", p.mu().to_string()),
            ("a", p.a().to_string()),
            ("gamma", p.gamma().to_string()),
            ("alpha", p.alpha().to_string()),
            ("beta", p.beta().to_string()),
            ("theta", p.theta().to_string()),
            ("cfl_mode", self.cfl.mode.to_string()),
            ("cfl_safety", self.cfl.safety.to_string()),
            ("cfl_practical_number", self.cfl.practical_number.to_string()),
            ("cfl_dt_max", opt(self.cfl.dt_max.map(|v| v.to_string()))),
            ("elliptic_rel_tolerance", self.elliptic.rel_tolerance.to_string()),
            ("elliptic_max_iterations", opt(self.elliptic.max_iterations.map(|v| v.to_string()))),
            ("t_end", self.t_end.to_string()),
            ("output_every", self.output_every.to_string()),
            ("output_times", times),
            ("output_dir", opt(self.output_dir.as_ref().map(|d| d.display().to_string()))),
            ("init", self.init.to_string()),
            (
                "quadrature",
                match self.quadrature {
                    Quadrature::Gauss2x2 => "gauss2x2".into(),
                    Quadrature::Midpoint => "midpoint".into(),
                },
            ),
            ("check_invariants", self.check_invariants.to_string()),
        ];
        let mut out = String::new();
        for (k, v) in lines {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_comments_and_blank_lines() {
        let text = "\
# reference run
n_cells = 40   # coarse
bc = periodic

gamma = 10
init = gaussian2
cfl_mode = strict_entropy
output_times = 0, 2, 4.5
t_end = 6
check_invariants = false
";
        let cfg = SimConfig::parse(text).unwrap();
        assert_eq!(cfg.n_cells, 40);
        assert_eq!(cfg.bc, BoundaryCondition::Periodic);
        assert_eq!(cfg.params.gamma(), 10.0);
        assert_eq!(cfg.init, InitialData::Gaussian2);
        assert_eq!(cfg.cfl.mode, CflMode::StrictEntropy);
        assert_eq!(cfg.output_times, vec![0.0, 2.0, 4.5]);
        assert!(!cfg.check_invariants);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SimConfig::parse("nonsense = 1").is_err());
        assert!(SimConfig::parse("n_cells 40").is_err());
        assert!(SimConfig::parse("gamma = 1.5").is_err());
        assert!(SimConfig::parse("n_cells = 2").is_err());
        assert!(SimConfig::parse("cfl_safety = 1.5").is_err());
        assert!(SimConfig::parse("init = banana").is_err());
        let err = SimConfig::parse("t_end = 1\nbc = sideways").unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn round_trips_through_text() {
        let mut cfg = SimConfig::default();
        cfg.apply_override("init=custom(0.3*exp(-(x^2+y^2)))").unwrap();
        cfg.apply_override("cfl_dt_max=0.01").unwrap();
        cfg.apply_override("output_dir=/tmp/somewhere").unwrap();
        cfg.apply_override("alpha=2").unwrap();
        let again = SimConfig::parse(&cfg.to_config_string()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn initial_data_forms() {
        let params = ModelParams::reference(1.0, 3.0).unwrap();
        assert_eq!("uniform(0.5)".parse::<InitialData>().unwrap(), InitialData::UniformValue(0.5));
        assert_eq!("uniform(n_inf)".parse::<InitialData>().unwrap(), InitialData::UniformSteady);
        let custom: InitialData = "custom(2*x + y^2 - cos(0))".parse().unwrap();
        let f = custom.evaluator(&params).unwrap();
        assert!((f(1.5, 2.0) - 6.0).abs() < 1e-15);
        let g1 = InitialData::Gaussian1.evaluator(&params).unwrap();
        assert_eq!(g1(0.0, 0.0), 0.5);
        let g2 = InitialData::Gaussian2.evaluator(&params).unwrap();
        assert!((g2(0.7, 0.0) - 0.5).abs() < 1e-3);
        assert!((g2(-0.6, 0.2) - 0.5).abs() < 1e-3);
        let bad = InitialData::Custom("exp(".into());
        assert!(matches!(bad.evaluator(&params), Err(Error::Expression { .. })));
        let unknown = InitialData::Custom("z + 1".into());
        assert!(unknown.evaluator(&params).is_err());
    }
}
