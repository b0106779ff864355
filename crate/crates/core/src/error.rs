use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LcsError {
    #[error("control value {u} outside the admissible range [{lo}, {hi}]")]
    ControlOutOfRange { u: f64, lo: f64, hi: f64 },

    #[error("matrix does not commute with J (||AJ - JA||_inf = {residual:e})")]
    NonCommuting { residual: f64 },

    #[error("invalid control range [{lo}, {hi}]: zero must be interior")]
    InvalidControlRange { lo: f64, hi: f64 },

    #[error("invalid automorphism: {0}")]
    InvalidAutomorphism(String),

    #[error("automorphism with a = {a}, t = {t} is only defined on the universal cover")]
    NonIntegerAutomorphism { a: f64, t: f64 },

    #[error("invalid control input: {0}")]
    InvalidInput(String),

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}

pub type Result<T> = std::result::Result<T, LcsError>;
