use std::path::PathBuf;

use thiserror::Error;
use tmpredict_core::Error as CoreError;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, missing inputs or malformed data.
    #[error("{0}")]
    Validation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for validation problems, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Json { .. } => 1,
            CliError::Io { .. } => 2,
            CliError::Core(e) => match e {
                CoreError::Parse { .. }
                | CoreError::NoRecords
                | CoreError::Ordering { .. }
                | CoreError::Bounds { .. }
                | CoreError::Split(_)
                | CoreError::InsufficientData { .. }
                | CoreError::Dimension(_)
                | CoreError::Domain(_)
                | CoreError::InvalidArgument(_)
                | CoreError::Checkpoint(_) => 1,
                _ => 2,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Validation("x".into()).exit_code(), 1);
        assert_eq!(
            CliError::Core(CoreError::Parse {
                line: 3,
                message: "bad".into()
            })
            .exit_code(),
            1
        );
        assert_eq!(CliError::Core(CoreError::Numeric { batch_index: 0 }).exit_code(), 2);
        assert_eq!(CliError::Core(CoreError::Solver("x".into())).exit_code(), 2);
    }
}
