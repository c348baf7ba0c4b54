use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("not an exact rational: {0:?}")]
    Parse(String),
}

/// Errors raised by instance construction and evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoreError {
    #[error("matrix is empty")]
    EmptyMatrix,
    #[error("matrix rows have unequal lengths")]
    RaggedMatrix,
    #[error("matrix has rank at least two")]
    RankTooHigh,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("factorization u vᵀ disagrees with the given matrix")]
    FactorizationMismatch,
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid instance file: {0}")]
    Format(String),
    #[error(transparent)]
    Rational(#[from] RationalError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("malformed system: {0}")]
    Malformed(String),
    #[error("simplex iteration limit {0} exceeded")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Lp(#[from] LpError),
}
