//! Command-line pipeline for performance-weighted expert judgement and basket
//! cost propagation. The binary is a thin wrapper over [`app::execute`].

pub mod app;
pub mod config;
pub mod error;
pub mod inputs;
pub mod money;
pub mod pipeline;
pub mod report;

pub use error::{CliError, Result};
