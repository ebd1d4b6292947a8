//! Presets for the two reference experiments on `[-2.5, 2.5]^2`.
//!
//! Both use homogeneous Neumann conditions although the Gaussian data is not
//! exactly flat at the boundary; its gradient there is below `1e-50`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::BoundaryCondition;
use crate::transport::ModelParams;

use super::{run, InitialData, RunOutput, SimConfig};

/// Cells per axis of the reference resolution `h = 1/64`.
pub const REFERENCE_CELLS: usize = 320;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Single Gaussian, `p = n^3`, frames at `t = 0, 1, 2, 4`.
    Fig1,
    /// Two Gaussians, `p = n^10`, frames at `t = 0, 2, 4, 6`.
    Fig2,
}

impl Figure {
    pub fn times(self) -> &'static [f64] {
        match self {
            Figure::Fig1 => &[0.0, 1.0, 2.0, 4.0],
            Figure::Fig2 => &[0.0, 2.0, 4.0, 6.0],
        }
    }

    /// Configuration at `h = scale / 64`.
    pub fn config(self, scale: usize) -> Result<SimConfig> {
        if scale == 0 || !REFERENCE_CELLS.is_multiple_of(scale) {
            return Err(Error::Config(format!(
                "scale factor {scale} must divide {REFERENCE_CELLS}"
            )));
        }
        let (gamma, init) = match self {
            Figure::Fig1 => (3.0, InitialData::Gaussian1),
            Figure::Fig2 => (10.0, InitialData::Gaussian2),
        };
        let times = self.times();
        Ok(SimConfig {
            lo: -2.5,
            hi: 2.5,
            n_cells: REFERENCE_CELLS / scale,
            bc: BoundaryCondition::Neumann,
            params: ModelParams::reference(1.0, gamma)?,
            t_end: *times.last().expect("non-empty"),
            output_times: times.to_vec(),
            init,
            ..SimConfig::default()
        })
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
        })
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1" => Ok(Figure::Fig1),
            "fig2" => Ok(Figure::Fig2),
            other => Err(Error::Config(format!("unknown figure `{other}` (expected fig1 or fig2)"))),
        }
    }
}

/// Runs a figure preset, writing frames at its snapshot times into `out_dir`.
pub fn reproduce(figure: Figure, out_dir: Option<&Path>, scale: usize) -> Result<RunOutput> {
    let mut cfg = figure.config(scale)?;
    cfg.output_dir = out_dir.map(Path::to_path_buf);
    run(&cfg)
}
