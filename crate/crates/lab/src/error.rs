use std::path::PathBuf;

use spinelab_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file was readable but its content does not match the expected format.
    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },

    #[error("{0}")]
    Usage(String),
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;

impl LabError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, msg: impl ToString) -> Self {
        LabError::Format {
            path: path.into(),
            msg: msg.to_string(),
        }
    }

    /// Process exit code: 2 for simulation or training divergence, 1 for
    /// everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Core(
                CoreError::SimulationDiverged { .. } | CoreError::TrainingDiverged { .. },
            ) => 2,
            _ => 1,
        }
    }
}
