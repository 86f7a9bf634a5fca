use thiserror::Error;

use morp_core::MorpError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] MorpError),
}

impl BenchError {
    /// Process exit code for the command line.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Io(_) | BenchError::Csv(_) | BenchError::Core(MorpError::Io(_)) => 3,
            BenchError::Config(_) | BenchError::Core(_) => 2,
        }
    }
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
