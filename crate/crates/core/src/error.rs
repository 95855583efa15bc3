use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-positive density value {value:e} at node {index} (x = {x:?})")]
    NonPositiveDensity { index: usize, x: Vec<f64>, value: f64 },

    #[error("function is not centred: E_mu[u] = {mean:e}")]
    NotCentred { mean: f64 },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("derivative order {order} exceeds supported depth {max}")]
    DerivativeOrder { order: usize, max: usize },

    #[error("gram matrix is singular or ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("explicit step is unstable: {0}")]
    Unstable(String),

    #[error("numerical blow-up at step {step} (t = {time}): {detail}")]
    BlowUp { step: usize, time: f64, detail: String },

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
