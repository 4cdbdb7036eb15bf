use thiserror::Error;

use crate::system::StrategyKind;

pub type Result<T, E = AoiError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AoiError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("exponential integral is singular at x = 0")]
    EiSingularity,

    #[error("divergent AoI: block error rate {epsilon} is too close to 1")]
    DivergentAoi { epsilon: f64 },

    #[error("AoI exceeds the floating-point range (lambda * serving time = {exponent})")]
    Overflow { exponent: f64 },

    #[error("high-SNR approximation invalid at outer radius (capacity {capacity} <= 0)")]
    HighSnrInvalid { capacity: f64 },

    #[error("UE beyond decodable range under approximation (distance {distance})")]
    BeyondDecodableRange { distance: f64 },

    #[error("insufficient horizon: observation window {window} is shorter than one service cycle {cycle}")]
    InsufficientHorizon { window: f64, cycle: f64 },

    #[error("insufficient renewal samples: {found} deliveries in replication {replication}, need {needed}")]
    InsufficientRenewalSamples {
        found: usize,
        needed: usize,
        replication: usize,
    },

    #[error("strategy {0} is not supported by this operation")]
    UnsupportedStrategy(StrategyKind),

    #[error("UE index {index} out of range for {n_ues} UEs")]
    UeOutOfRange { index: usize, n_ues: usize },

    #[error("empty input")]
    Empty,

    #[error("no threshold: {0}")]
    NoThreshold(String),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> AoiError {
    AoiError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {value}")))
    }
}
