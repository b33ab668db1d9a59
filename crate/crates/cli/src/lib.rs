//! Experiment orchestration for the shape-assembly swarm: training,
//! evaluation, prior and prompt ablations, function generation and export.

pub mod ablate;
pub mod config;
pub mod error;
pub mod eval;
pub mod export;
pub mod generate;
pub mod run;

pub use config::{ExperimentConfig, RewardChoice};
pub use error::CliError;
