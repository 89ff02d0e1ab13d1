use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("factor {index} is {found}, expected {expected}")]
    FactorType {
        index: usize,
        expected: &'static str,
        found: String,
    },

    #[error("factor index {index} out of range for a space with {len} factors")]
    FactorIndex { index: usize, len: usize },

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unstable drive: |Omega_p| = {omega_p} must be below Delta_m = {delta_m} (squeezing diverges)")]
    UnstableDrive { omega_p: f64, delta_m: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("integration failure at t = {time}: {reason}")]
    IntegrationFailure { time: f64, reason: String },

    #[error("step size underflow at t = {time} (h = {step:e}); tighten the truncation or reduce the coupling-time product")]
    Stiffness { time: f64, step: f64 },

    #[error("truncation guard tripped: {0}")]
    TruncationGuard(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("oracle failure: {0}")]
    OracleFailure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn mismatch(msg: impl Into<String>) -> Self {
        Error::SpaceMismatch(msg.into())
    }
}
