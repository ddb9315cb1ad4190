use thiserror::Error;

use crate::special::SpecialError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("quantiles must be strictly increasing: q05={q05}, q50={q50}, q95={q95}")]
    QuantileOrder { q05: f64, q50: f64, q95: f64 },
    #[error("range error: {0}")]
    Range(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("expert {expert} has no judgement for calibration item {item}")]
    MissingJudgement { expert: String, item: String },
    #[error("cutoff {alpha} excludes every expert")]
    AllExcluded { alpha: f64 },
    #[error("no candidate cutoff produced a feasible decision maker")]
    NoFeasibleCutoff,
    #[error("weights sum to {sum}, expected 1")]
    Weight { sum: f64 },
    #[error("seasonal history needs at least 2 observations, got {0}")]
    InsufficientHistory(usize),
    #[error("category mismatch: {0}")]
    CategoryMismatch(String),
    #[error("unknown category {0}")]
    UnknownCategory(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Special(#[from] SpecialError),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::AllExcluded { .. } | Error::NoFeasibleCutoff | Error::Special(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
