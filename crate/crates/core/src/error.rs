use thiserror::Error;

/// Failure modes shared across the crate.
///
/// `HypothesisViolated` is deliberately separate from the operational
/// variants: it reports that a structural assumption of the underlying
/// theory failed on the given data (sign-changing principal eigenfunction,
/// nonpositive parabolic damping, unmet initial-slope threshold). Callers
/// that certify runs translate it into a verdict rather than a crash.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("missing declaration: {0}")]
    MissingDeclaration(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("iteration did not converge: {0}")]
    NonConvergence(String),

    #[error("integrator stalled at t = {t}: step size underflow")]
    IntegratorStall { t: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for the verdict-class failures (exit code 2 at the CLI).
    pub fn is_hypothesis_violation(&self) -> bool {
        matches!(self, Error::HypothesisViolated(_))
    }
}
