//! Configuration, serialization and subcommands behind the `etclab` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{parse_config, parse_config_file, RunSpec};
pub use error::{CliError, ExitClass};
