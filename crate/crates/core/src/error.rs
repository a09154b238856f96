use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid shift: {0}")]
    InvalidShift(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("quadrature did not converge: estimated error {achieved:e} exceeds tolerance {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue {0:e}")]
    NotPsd(f64),

    #[error("fit rejected: {0}")]
    Fit(String),

    #[error("sampler: {0}")]
    Sampler(String),

    #[error("insufficient replicas: at least {needed} required, got {got}")]
    InsufficientReplicas { needed: usize, got: usize },

    #[error("degenerate variance for {process} at n = {n}")]
    DegenerateVariance { process: String, n: f64 },
}

impl Error {
    /// True for failures raised while sampling or estimating, as opposed to
    /// invalid input or numerical failures in the theory layer.
    pub fn is_sampler(&self) -> bool {
        matches!(
            self,
            Error::Sampler(_) | Error::InsufficientReplicas { .. } | Error::DegenerateVariance { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
