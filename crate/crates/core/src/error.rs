use thiserror::Error;

/// Errors raised by generators, solvers, constructions and estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The requested grid or point set exceeds a memory or enumeration budget.
    #[error("size error: {0}")]
    Size(String),
    /// The operation is not available for this lattice dimension or model.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// Construction parameters are infeasible for the grid size.
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    /// The construction produced nothing to work with at some level.
    #[error("degenerate construction at level {level}: {reason}")]
    Degenerate { level: usize, reason: String },
    /// Not enough samples for a statistical estimate.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
