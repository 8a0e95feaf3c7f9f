//! Orchestration of the stimulus → plan → session → analysis pipeline.

pub mod commands;
pub mod config;
mod error;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
