//! Experiment driver for `bayesaf-core`: JSON configs, impulse-response
//! files, CSV output and the `bayesaf` command line.

pub mod app;
pub mod config;
pub mod csv;
pub mod engine;
pub mod error;
pub mod ir;
pub mod reproduce;

pub use app::run;
pub use error::{CliError, CliResult};
