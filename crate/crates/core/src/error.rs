use thiserror::Error;

/// Errors raised by parameter validation and resource limits.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("noncentrality parameter must be nonnegative, got {0}")]
    NegativeNoncentrality(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("exact computation needs about {needed} digits, budget is {budget}")]
    DigitBudgetExceeded { needed: u64, budget: u64 },

    #[error("shift_noncentrality requires phi_to >= phi_from (got {from} -> {to})")]
    DownwardShift { from: f64, to: f64 },

    #[error("spectral evaluation limited to m <= {limit}, got m = {m}")]
    SpectralLimit { m: u64, limit: u64 },

    #[error("probability generating function must satisfy G(1) = 1, got {0}")]
    InvalidPgf(f64),

    #[error("degenerate distribution: {0}")]
    Degenerate(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
