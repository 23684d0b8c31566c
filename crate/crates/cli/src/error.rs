use std::path::{Path, PathBuf};

use shiftbt::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Core(#[from] Error),
    /// Every requested computation failed.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    /// 2 for usage and input errors, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::Format(_) => 2,
            CliError::Failed(_) => 3,
            CliError::Core(e) => match e {
                Error::DimensionMismatch(_)
                | Error::NonFinite(_)
                | Error::GridMisaligned { .. }
                | Error::Unbounded
                | Error::ZeroX0
                | Error::ZeroZ0
                | Error::DimensionTooSmall { .. }
                | Error::InvalidArgument(_) => 2,
                _ => 3,
            },
        }
    }
}
