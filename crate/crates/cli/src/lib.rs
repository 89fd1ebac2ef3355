//! Experiment driver: configuration, presets, initial states, run loops
//! and on-disk artifacts.

use std::path::{Path, PathBuf};

use pbdm_core::PbdmError;
use thiserror::Error;

pub mod config;
pub mod fld;
pub mod output;
pub mod presets;
pub mod recipes;
pub mod runner;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown preset {0:?}")]
    UnknownPreset(String),

    #[error(transparent)]
    Core(#[from] PbdmError),

    #[error("solver failed at step {step}: {source}")]
    Step { step: u64, source: PbdmError },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("malformed file: {0}")]
    Format(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Step index for solver failures.
    pub fn failed_step(&self) -> Option<u64> {
        match self {
            CliError::Step { step, .. } => Some(*step),
            _ => None,
        }
    }
}
