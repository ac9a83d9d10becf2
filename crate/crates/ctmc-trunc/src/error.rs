use std::io;

use ctmc_trunc_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    /// 2 for bad input, 3 for numeric failure, 4 for an inconclusive verdict
    /// in strict mode.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numeric(_) => 3,
            CliError::Inconclusive(_) => 4,
            CliError::Core(
                CoreError::NegativeEntry { .. }
                | CoreError::SingularBeyondKernel
                | CoreError::GeneratorInvariant { .. }
                | CoreError::ZeroMassWindow,
            ) => 3,
            _ => 2,
        }
    }
}
