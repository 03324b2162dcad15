//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by grid construction, assembly, solvers and file IO.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("point ({t}, {x}) lies outside the space-time domain")]
    OutOfDomain { t: f64, x: f64 },

    #[error("linear system is singular or numerically unstable: {0}")]
    SingularSystem(String),

    #[error("degenerate diffusion coefficient a = {0}; snapshot equation is not elliptic")]
    DegenerateDiffusion(f64),

    #[error("basis is numerically degenerate: {0}")]
    DegenerateBasis(String),

    #[error("moment solve diverged at t = {t}: {what}")]
    SolverDiverged { t: f64, what: String },

    #[error("snapshot generation failed for {failed} of {total} parameter points (> 1%)")]
    SnapshotFailures { failed: usize, total: usize },

    #[error("greedy stage m = {m}: every admissible candidate produced an unstable or failed solve")]
    GreedyStageFailed { m: usize },

    #[error("requested time {0} is not stored in the solution")]
    MissingTime(f64),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {what}")]
    Parse { path: String, what: String },
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
