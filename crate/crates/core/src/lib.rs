//! Explicit finite-difference solver for a Hele-Shaw type tumor growth model.
//!
//! The cell density `n` follows `d_t n - div(n grad W) = n G(p)` with pressure
//! `p = a n^gamma` and a velocity potential `W` given by the Brinkman equation
//! `-mu Lap W + W = p`. Each step solves the discrete Brinkman equation,
//! forms face velocities, picks a step size from the CFL bounds and applies a
//! conservative update with stabilized fluxes. The [`invariants`] module
//! checks the discrete maximum principles, mass balance, energy identity and
//! `L^2` entropy inequality that the scheme satisfies.

pub mod brinkman;
pub mod error;
pub mod grid;
pub mod invariants;
pub mod sim;
pub mod transport;

pub use error::{Error, Result};
