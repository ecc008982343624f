//! Experiment runner behind the `smartsched` binary.

pub mod commands;
pub mod config;

use std::path::PathBuf;

pub use commands::{run, Command, Outcome};
pub use config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] smartsched::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl From<smartsched::ConfigError> for HarnessError {
    fn from(e: smartsched::ConfigError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl HarnessError {
    /// 1 configuration or file problems, 2 runtime contract violations,
    /// 3 failed checks.
    pub fn exit_code(&self) -> i32 {
        use smartsched::Error as E;
        match self {
            HarnessError::Config(_) | HarnessError::Io { .. } => 1,
            HarnessError::Core(E::Config(_) | E::Io { .. } | E::Format { .. }) => 1,
            HarnessError::Core(_) => 2,
            HarnessError::CheckFailed(_) => 3,
        }
    }
}
