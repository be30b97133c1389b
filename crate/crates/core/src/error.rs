use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid graphon model: {0}")]
    InvalidModel(String),
    #[error("operation requires a ring graphon")]
    NotRing,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("iteration did not converge ({0})")]
    NoConvergence(String),
    #[error("integration step size underflow at t = {t}")]
    Stiffness { t: f64 },
    #[error("need at least {needed} points, found {found}")]
    InsufficientPoints { needed: usize, found: usize },
    #[error("no eigenvalues matched the target")]
    EmptyMatch,
    #[error("degenerate prediction: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
