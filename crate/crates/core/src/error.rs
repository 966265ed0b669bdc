use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("unsupported family: {0}")]
    Unsupported(String),

    #[error("lag out of range: {0}")]
    LagOutOfRange(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("blowup at step {step} (t = {time}): {reason}")]
    Blowup {
        step: usize,
        time: f64,
        reason: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
