use thiserror::Error;

use crate::solver::Trajectory;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("point outside the disk: r = {r} > R = {radius}")]
    OutsideDomain { r: f64, radius: f64 },

    #[error("boundary projection undefined at the origin")]
    AtOrigin,

    #[error("under-resolved: {0}")]
    Resolution(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("friction coefficient is negative (min {min:.3e} at theta = {theta:.4})")]
    NegativeFriction { min: f64, theta: f64 },

    #[error("fixed-point map is not contracting after {iterations} iterations (n = {n}); try a larger n")]
    NonContraction {
        n: usize,
        iterations: usize,
        residual_history: Vec<f64>,
    },

    #[error("fixed-point iteration did not reach tol after {iterations} iterations (last change {last_change:.3e})")]
    MaxIterations { iterations: usize, last_change: f64 },

    #[error("solver aborted at t = {t} (step {step}): {reason}")]
    SolverAbort {
        t: f64,
        step: usize,
        reason: String,
        partial: Option<Box<Trajectory>>,
    },

    #[error("snapshot mismatch: {0}")]
    SnapshotMismatch(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
