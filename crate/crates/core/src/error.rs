use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the mathematical or physical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or incomplete input (datasets, distributions, geometry).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An iterative or truncated computation failed its convergence gate.
    #[error("not converged: {what} (residual {residual:.3e})")]
    NotConverged { what: String, residual: f64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures the CLI reports as numeric non-convergence.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NotConverged { .. })
    }
}
