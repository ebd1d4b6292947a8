use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("initial data is not finite at ({x}, {y})")]
    NonFiniteInit { x: f64, y: f64 },

    #[error("elliptic solve did not converge after {iterations} iterations (residual {residual:e})")]
    IterationLimitExceeded { iterations: usize, residual: f64 },

    #[error("dense Brinkman matrix is singular")]
    SingularMatrix,

    #[error("dense oracle refused: {n_cells} cells per axis exceeds the limit of {limit}")]
    DenseTooLarge { n_cells: usize, limit: usize },

    #[error("time step {dt:e} exceeds the CFL bound {bound:e}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("non-finite density after step {step}")]
    NonFiniteState { step: usize },

    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("bad expression `{expr}`: {reason}")]
    Expression { expr: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Errors that come from the numerics rather than from the user's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IterationLimitExceeded { .. }
                | Error::SingularMatrix
                | Error::CflViolation { .. }
                | Error::NonFiniteState { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
