//! Configuration and orchestration of Monte Carlo tomography studies.
//!
//! A run is described by a [`RunConfig`] read from a TOML file plus
//! command-line overrides. [`execute`] runs it and writes an aggregate CSV, a
//! JSON-lines log of every trial and a manifest echoing the configuration.

pub mod config;
pub mod run;

pub use config::{parse_config, parse_config_str, Experiment, Overrides, RunConfig, StateSpec};
pub use run::{execute, RunSummary};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Runtime(#[from] raqst::Error),
}

impl CliError {
    /// 1 for configuration problems, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}
