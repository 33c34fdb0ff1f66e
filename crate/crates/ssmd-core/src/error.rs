use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector must have at least one component")]
    Empty,

    #[error("component {index} is not finite")]
    NonFinite { index: usize },

    #[error("component {index} must be strictly positive for the negative-entropy map (got {value})")]
    NonPositive { index: usize, value: f64 },

    #[error("point is infeasible: constraint violation {violation:e} exceeds {tol:e}")]
    Infeasible { violation: f64, tol: f64 },

    #[error("unsupported combination: {0}")]
    Unsupported(&'static str),

    #[error("invalid {name}: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },

    #[error(
        "reference solver stopped after {iterations} iterations without converging \
         (last step {last_step:e}, projected-gradient norm {projected_gradient:e})"
    )]
    NoConvergence {
        iterations: usize,
        last_step: f64,
        projected_gradient: f64,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: &'static str) -> Self {
        Error::InvalidParameter { name, reason }
    }
}
