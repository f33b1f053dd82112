//! File formats, run configurations and subcommands of the `advdefer` tool.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod tensor;

pub use commands::run;
pub use config::{DataSource, Provenance, RunConfig};
pub use error::{CliError, CliResult};
pub use tensor::{CostTensor, TensorHeader};
