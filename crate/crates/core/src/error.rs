use thiserror::Error;

/// Errors raised by measure construction, transport solvers and experiments.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("scale factor must be nonzero")]
    DegenerateScale,

    #[error("cost exponent must be positive and finite, got {0}")]
    InvalidExponent(f64),

    #[error("instance of {rows}x{cols} cells exceeds the oracle limit of {limit}")]
    InstanceTooLarge { rows: usize, cols: usize, limit: usize },

    #[error("unsupported instance: {0}")]
    Unsupported(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("measure has nonzero barycenter {0}")]
    NonzeroBarycenter(String),

    #[error("measure has zero variance")]
    ZeroVariance,

    #[error("measure is not log-concave: {0}")]
    NotLogConcave(String),

    #[error("invalid transport plan: {0}")]
    InvalidPlan(String),

    #[error("simplex did not terminate within {0} pivots")]
    PivotLimit(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
