//! Configuration, report formats and command implementations behind the
//! `orbitron` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::{run_command, write_outputs, Command, CommandOutput, RunOptions};
pub use config::RunConfig;
pub use error::CliError;
