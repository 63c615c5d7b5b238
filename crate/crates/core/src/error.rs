use thiserror::Error;

/// Errors raised by every layer of the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("uncertainty-principle parameters violate A > eta*sqrt(B): {0}")]
    InvalidUp(String),

    #[error("invalid sparsity fraction: {0}")]
    InvalidDelta(String),

    #[error("frame Gram matrix S*S^T is singular")]
    SingularGram,

    #[error("LP solver failed: {0}")]
    SolverFailure(String),

    #[error("iterative embedding stopped contracting at step {step}: ratio {ratio:.4} > {limit:.4}")]
    NonContracting { step: usize, ratio: f64, limit: f64 },

    #[error("Kashin parameters are required for democratic bounds")]
    MissingParams,

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("bit budget too small: {0}")]
    BudgetTooSmall(String),

    #[error("payload header does not match frame: {0}")]
    HeaderMismatch(String),

    #[error("corrupt payload: {0}")]
    CorruptPayload(String),

    #[error("invalid compressor spec: {0}")]
    InvalidSpec(String),

    #[error("invalid step size: {0}")]
    InvalidStepSize(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid objective: {0}")]
    InvalidObjective(String),

    #[error("bit budget exceeded at iteration {iteration}: {bits} bits > budget {budget}")]
    BudgetExceeded { iteration: usize, bits: u64, budget: u64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
