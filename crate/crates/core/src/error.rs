use thiserror::Error;

/// Errors raised by the numeric and probabilistic routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("no regular-variation envelope available for {0}")]
    NoEnvelope(String),

    #[error("limit of the ratio function is unknown for {0}")]
    UnknownLimit(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("requested precision unattainable (achieved certificate {certificate:e})")]
    PrecisionUnattainable { certificate: f64 },

    #[error("not applicable: {0}")]
    Inapplicable(String),

    #[error("numerical routine failed to converge: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
