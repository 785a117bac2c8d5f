//! Command-line runner for `qmetro-core`: run configuration, the
//! classical-vs-quantum comparison harness, and the CSV/JSON outputs.

pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod output;

pub use config::RunConfig;
pub use error::{AppError, AppResult};
