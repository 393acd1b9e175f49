use thiserror::Error;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Σ n α(0) / 3 ≥ 1: the Clausius-Mosotti denominator has no positive value.
    #[error("Clausius-Mosotti denominator violated (sum n*alpha/3 = {0})")]
    DenominatorViolation(f64),

    #[error("coincident points (separation {0:e} below minimum)")]
    CoincidentPoints(f64),

    #[error("integrand is not finite at {0:e}")]
    NonFinite(f64),

    #[error("quadrature budget of {0} evaluations exhausted")]
    BudgetExceeded(usize),

    #[error("geometry violation: {0}")]
    GeometryViolation(String),

    #[error("unsupported order {0}")]
    UnsupportedOrder(usize),

    #[error("divergent series (|q| = {0})")]
    DivergentSeries(f64),

    #[error("convergence gate failed (margin {0})")]
    ConvergenceGateFailed(f64),
}

impl Error {
    /// Stable variant name, used by the CLI when reporting numerical failures.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::DenominatorViolation(_) => "DenominatorViolation",
            Error::CoincidentPoints(_) => "CoincidentPoints",
            Error::NonFinite(_) => "NonFinite",
            Error::BudgetExceeded(_) => "BudgetExceeded",
            Error::GeometryViolation(_) => "GeometryViolation",
            Error::UnsupportedOrder(_) => "UnsupportedOrder",
            Error::DivergentSeries(_) => "DivergentSeries",
            Error::ConvergenceGateFailed(_) => "ConvergenceGateFailed",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
