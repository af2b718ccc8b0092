use thiserror::Error;

use crate::orbits::Family;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({x}, {y}) lies on or outside the ring triangle")]
    Domain { x: f64, y: f64 },

    #[error("angles violate the ordering theta1 < theta2 < theta3 < theta1 + 2pi: {0:?}")]
    Ordering([f64; 3]),

    #[error("trajectory escaped the bounded region at t = {t}")]
    Escape { t: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepFailure { t: f64, h: f64 },

    #[error("seed (y = {y}, py = {py}) cannot reach energy {energy} with px >= 0")]
    Seed { y: f64, py: f64, energy: f64 },

    #[error("no section crossing within t = {t_max}")]
    NoCrossing { t_max: f64 },

    #[error("Newton refinement did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("converged orbit belongs to family {found:?}, requested {requested:?}")]
    WrongFamily { requested: Family, found: Family },

    #[error("continuation broke after energy {last_good} (failed at {failed}): {reason}")]
    ContinuationBreak {
        last_good: f64,
        failed: f64,
        reason: String,
    },

    #[error("mesh spacing {spacing:e} does not resolve the minimal wavelength {wavelength:e}")]
    Resolution { spacing: f64, wavelength: f64 },

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("eigensolver stagnated: {0}")]
    SolverStagnation(String),

    #[error("energy {energy} outside the tabulated range [{lo}, {hi}]")]
    Range { energy: f64, lo: f64, hi: f64 },

    #[error("no states in window [{lo}, {hi}]")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
