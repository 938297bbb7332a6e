use thiserror::Error;

use crate::learner::RunReport;
use crate::linalg::Vector;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sparsity level {s} is outside 1..={d}")]
    InvalidSparsity { s: usize, d: usize },

    #[error("operation requires a nonzero vector")]
    DegenerateVector,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The projection solver ran out of iterations. `best` is the last
    /// feasible-within-tolerance iterate it produced.
    #[error("projection did not converge after {iterations} iterations (residual {residual:e})")]
    ProjectionNotConverged {
        best: Vector,
        iterations: usize,
        residual: f64,
    },

    #[error("no point fell in the sampling band after {attempts} draws (b = {band})")]
    BandSamplingExhausted { attempts: u64, band: f64 },

    #[error("feasible set is empty or its witness point is infeasible")]
    InfeasibleSet,

    #[error("report was produced in {found} mode, expected {expected}")]
    ModeMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("bad result data: {0}")]
    DataError(String),

    #[error("run aborted: {source}")]
    RunAborted {
        #[source]
        source: Box<Error>,
        partial: Box<RunReport>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
