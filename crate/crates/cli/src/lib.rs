//! CLI driver: dataset ingestion, model persistence, and the subcommands
//! that run every experiment. All heavy lifting lives in `zvl-core`.

pub mod cli;
pub mod commands;
pub mod error;
pub mod formats;
pub mod manifest;

pub use error::{CliError, Result};
