use thiserror::Error;

/// Errors raised by the evaluation, optimization and simulation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside the domain of the formula that consumes it.
    #[error("invalid {field}: {reason}")]
    Domain { field: &'static str, reason: String },

    /// A root-finder was handed an interval without a sign change.
    #[error("no sign change on [{lo}, {hi}] (g(lo) = {g_lo}, g(hi) = {g_hi})")]
    Bracket { lo: f64, hi: f64, g_lo: f64, g_hi: f64 },

    /// An iterative solver stopped without meeting its tolerance.
    #[error("solver failed: {0}")]
    Solver(String),

    /// An integrand or objective produced a non-finite value.
    #[error("non-finite evaluation at z = {at}: {value}")]
    Evaluation { at: f64, value: f64 },

    /// Not enough tail mass to fit a decay exponent.
    #[error("insufficient tail mass: {0}; raise the number of simulated blocks")]
    InsufficientTail(String),
}

impl Error {
    pub(crate) fn domain(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
