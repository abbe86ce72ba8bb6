use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum CoxError {
    #[error("cohort has no uncensored observations")]
    NoEvents,

    #[error("observed information matrix is singular or not positive definite")]
    SingularInformation,

    #[error("root solver: interval [{lo}, {hi}] does not bracket a sign change")]
    NonBracketing { lo: f64, hi: f64 },

    #[error("no positive root in this parameter regime: {0}")]
    NoPositiveRoot(String),

    #[error("linear program failed: {0}")]
    LpFailure(String),

    #[error("cone projection did not converge within the iteration budget")]
    ProjectionDidNotConverge,

    #[error("objective became non-finite at (a={a}, b={b}, r={r})")]
    NonFiniteObjective { a: f64, b: f64, r: f64 },

    #[error("optimizer evaluated a non-finite objective value at {0:?}")]
    NonFiniteProbe(Vec<f64>),

    #[error("fit diverged; the MPLE appears not to exist")]
    FitDiverged,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoxError>;
