//! Library side of the `mindprobe` command: response CSV I/O, model archives and the
//! subcommand implementations. Each command returns the text it prints.

pub mod commands;
pub mod diagnose;
pub mod error;
pub mod model;
pub mod report;
pub mod responses;
pub mod style;

pub use error::{CliError, CliResult};
