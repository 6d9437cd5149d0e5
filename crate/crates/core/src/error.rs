//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("spatial dimension {0} is outside the supported range {{4, 5, 6}}")]
    DimensionOutOfRange(u32),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field length {got} does not match grid size {expected}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("state symmetry does not match the requested profile or bound")]
    SymmetryMismatch,

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("bracket not found: {0}")]
    BracketNotFound(String),

    #[error("initial state does not satisfy the blow-up condition")]
    NotInBlowupRegion,

    #[error("record has too few samples: {0}")]
    InsufficientSamples(String),

    #[error("monitor series inconsistent: {0}")]
    MonitorInconsistent(String),

    #[error("no strictly positive mass-weight vector exists for this nonlinearity")]
    NoPositiveMassWeights,
}

pub type Result<T> = std::result::Result<T, Error>;
