use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("mode count {count} exceeds cap {cap}")]
    ResourceLimit { count: u64, cap: u64 },

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("divergent tail: {0}")]
    Divergence(String),

    #[error("no sign change: {message}")]
    NoSolution { message: String, grid: Vec<(f64, f64)> },

    #[error("singular evaluation: {0}")]
    Singular(String),

    #[error("regime error: {0}")]
    Regime(String),

    #[error("bracket error: margin has no sign change on [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("quadrature did not converge: estimated error {achieved:e} above {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
