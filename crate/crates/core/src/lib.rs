//! Structured expert judgement toolkit.
//!
//! Elicited 5/50/95 percentile judgements become piecewise-uniform
//! distributions ([`elicitation`]); experts are scored and pooled into a
//! performance-weighted decision maker ([`classical`]); per-category decision
//! makers are mixed across scenarios and propagated through weighted baskets by
//! seeded Monte Carlo ([`propagation`]).
//!
//! The numerical kernels are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the double precision types used by the command line tool.

// Negated comparisons are how NaN is rejected throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod elicitation;
pub mod error;
pub mod propagation;
pub mod scalar;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Quantiles = elicitation::ElicitedQuantiles<f64>;
pub type Range = elicitation::IntrinsicRange<f64>;
pub type Distribution = elicitation::PiecewiseDistribution<f64>;
pub type Distribution32 = elicitation::PiecewiseDistribution<f32>;
pub type CalibrationItem = classical::CalibrationItem<f64>;
pub type DecisionMaker = classical::DecisionMaker<f64>;
pub type ExpertScore = classical::ExpertScore<f64>;
pub type Basket = propagation::BasketDefinition<f64>;
pub type Baseline = propagation::BaselineProjection<f64>;
pub type Summary = stats::Summary<f64>;
