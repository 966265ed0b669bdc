//! Front end for the feasibility, kernel, sampling and simulation tools:
//! config parsing, artifact writing and the subcommand bodies.

pub mod commands;
pub mod config;
pub mod error;

pub use config::{parse_config, RunConfig};
pub use error::CliError;
