//! Command-line front end: configuration, file formats, plots and the
//! subcommands wiring them to the reconstruction library.

// Negated float comparisons are kept so that NaN fails every range check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod plot;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
