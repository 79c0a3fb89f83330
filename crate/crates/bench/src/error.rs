use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("config: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    ConfigFile { path: PathBuf, line: usize, message: String },

    #[error(transparent)]
    Core(#[from] hschur::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("GMRES did not converge: {0}")]
    NotConverged(String),
}

impl BenchError {
    /// Process exit code: 2 for non-convergence, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::NotConverged(_) => 2,
            _ => 1,
        }
    }
}

pub type BenchResult<T> = std::result::Result<T, BenchError>;
