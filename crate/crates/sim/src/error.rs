use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(#[source] dqvi::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Trajectory { path: PathBuf, message: String },
    #[error("trajectories are not comparable: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, SimError>;

impl SimError {
    pub fn config(message: impl Into<String>) -> Self {
        SimError::Config(message.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 for bad input, 3 for solver failure, 4 for I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            SimError::Config(_) | SimError::Schema(_) => 2,
            SimError::Solver(_) => 3,
            SimError::Io { .. } | SimError::Trajectory { .. } => 4,
        }
    }
}

impl From<dqvi::Error> for SimError {
    fn from(e: dqvi::Error) -> Self {
        if e.is_solver_failure() {
            SimError::Solver(e)
        } else {
            SimError::Config(e.to_string())
        }
    }
}
