//! Batch front end: configuration, file formats and the `degrade`, `inpaint`,
//! `metrics` and `spectrum` commands.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;

pub use config::{Algorithm, Command, RunConfig};
pub use error::{CliError, Result};
