use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside the family domain: {0}")]
    DomainError(String),

    #[error("family has no closed-form derivative: {0}")]
    NotDifferentiable(String),

    #[error("series is not summable: {0}")]
    NotSummable(String),

    #[error("tolerance {requested:e} unreachable: {reason}")]
    TolUnreachable { requested: f64, reason: String },

    #[error("test function is not admissible: {0}")]
    NotAdmissible(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn tol(requested: f64, reason: impl Into<String>) -> Self {
        Error::TolUnreachable {
            requested,
            reason: reason.into(),
        }
    }
}
