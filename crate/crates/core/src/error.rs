use thiserror::Error;

/// Errors raised by the benchmarking toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("Kraus operators are not trace preserving (deviation {deviation:.3e})")]
    NotTracePreserving { deviation: f64 },

    #[error("projector has zero trace")]
    EmptyProjector,

    #[error("group closure not reached after {0} elements")]
    ClosureNotReached(usize),

    #[error("matrix is not an element of the group")]
    NotInGroup,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("inconsistent irrep decomposition: {0}")]
    InconsistentIrreps(String),

    #[error("time evolution did not converge within {steps} steps (last change {change:.3e})")]
    NotConverged { steps: usize, change: f64 },

    #[error("invalid device parameters: {0}")]
    InvalidParams(String),

    #[error("missing device parameters: {}", .0.join(", "))]
    MissingParams(Vec<String>),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("singular normal matrix; unidentifiable parameters: {}", .0.join(", "))]
    Singular(Vec<String>),

    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error("missing fit for {0}")]
    MissingFit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
