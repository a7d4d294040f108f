use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown model `{0}` (expected flat_log or sphere_log)")]
    UnknownModel(String),

    #[error("density exponent b must be positive and finite, got {0}")]
    InvalidExponent(f64),

    #[error("validity radius r_max = {r_max} outside the chart range (0, {limit})")]
    ChartRange { r_max: f64, limit: f64 },

    #[error("r = {r} outside the model domain (0, {r_max}]")]
    OutOfDomain { r: f64, r_max: f64 },

    #[error("node {node} has r = {r}, outside the model domain (0, {r_max}]")]
    NodeOutOfDomain { node: usize, r: f64, r_max: f64 },

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("step rejected: {0}")]
    StepRejected(String),

    #[error("singular-time estimation failed: {0}")]
    Estimation(String),

    #[error("blow-up analysis: {0}")]
    Blowup(String),

    #[error("monotonicity analysis: {0}")]
    Monotonicity(String),
}
