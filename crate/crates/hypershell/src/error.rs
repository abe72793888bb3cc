use thiserror::Error;

/// Which block of a block-type form a diagnostic refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockId {
    Plus,
    Minus,
}

impl std::fmt::Display for BlockId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BlockId::Plus => f.write_str("plus"),
            BlockId::Minus => f.write_str("minus"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("{0} block is not positive definite")]
    NotPositiveDefinite(BlockId),
    #[error("block of dimension zero")]
    ZeroDimensionBlock,
    #[error("form is degenerate: smallest |eigenvalue| {0:e}")]
    Degenerate(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operation requires a block-type form")]
    NotBlockType,
    #[error("estimated work {0:e} exceeds the budget")]
    BudgetExceeded(f64),
    #[error("value set has fewer than two elements")]
    EmptyValueSet,
    #[error("sample count {0} is below the minimum of 1000")]
    BadSampleCount(usize),
    #[error("quadrature supports d <= 3, got {0}")]
    QuadratureDimTooHigh(usize),
    #[error("enumeration visited more than {0} nodes")]
    EnumerationBudgetExceeded(u64),
    #[error("reduction did not produce a full-rank basis")]
    Underdetermined,
    #[error("dimension {0} is too small (need d > 4)")]
    DimensionTooSmall(usize),
    #[error("dropped tail {0:e} exceeds the certified tolerance")]
    TruncationTooLoose(f64),
    #[error("singular matrix")]
    SingularMatrix,
    #[error("imaginary part is not positive definite")]
    NotInSiegelHalfPlane,
    #[error("series does not converge: {0}")]
    Divergent(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot parse `{0}`")]
    Parse(String),
    #[error("precondition of {check} violated: {context}")]
    PreconditionViolated { check: String, context: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
