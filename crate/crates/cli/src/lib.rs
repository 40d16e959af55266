//! Batch driver for the velocity-space experiments: configuration parsing,
//! subcommands and CSV output.

pub mod commands;
pub mod config;
pub mod error;

pub use config::RunConfig;
pub use error::CliError;
