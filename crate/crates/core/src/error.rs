use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// A numerical routine stopped short of its tolerance. `achieved` is the
    /// error bound it did reach.
    #[error("numerical failure in {what}: achieved error {achieved:e}")]
    NumericalFailure { what: String, achieved: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn failure(what: impl Into<String>, achieved: f64) -> Error {
    Error::NumericalFailure {
        what: what.into(),
        achieved,
    }
}
