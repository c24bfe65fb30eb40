//! Experiment configuration and the command implementations behind the
//! `paraqa` binary.

mod commands;
mod config;

pub use commands::*;
pub use config::{ExperimentConfig, DROPOUT_GRID, OUTPUT_DIR_ENV};
