use std::path::{Path, PathBuf};

use lamarl::marl::TrainError;
use lamarl::swarm::EnvError;
use llmgen::{ClientError, PipelineError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("environment: {0}")]
    Env(#[from] EnvError),
    #[error("training: {0}")]
    Train(#[from] TrainError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("language model client: {0}")]
    Client(#[from] ClientError),
    #[error("generation pipeline: {0}")]
    Pipeline(#[from] PipelineError),
    #[error("review failed:\n{0}")]
    ReviewFailed(String),
    #[error("rejected at human review")]
    Rejected,
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
