use thiserror::Error;

/// Errors raised by the modelling, simulation and estimation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("lattice side {n} too small, need at least {min}")]
    LatticeTooSmall { n: usize, min: usize },
    #[error("covariance not positive definite after regularization (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("optimizer failed: {0}")]
    NoConvergence(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. } | Error::Numeric(_) | Error::NoConvergence(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
