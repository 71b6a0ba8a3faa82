use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("trajectory diverged at t = {t} (norm {norm:e})")]
    Diverged { t: f64, norm: f64 },

    #[error("operator is not coercive: smallest eigenvalue {lambda_min:e}")]
    NotCoercive { lambda_min: f64 },

    #[error("saddle-point expansion invalid: {0}")]
    ExpansionInvalid(String),

    #[error("nonlinear projection under-resolved: doubling quadrature changed it by {change:e}")]
    UnderResolved { change: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
