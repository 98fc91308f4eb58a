use std::io;
use std::path::{Path, PathBuf};

use lsdtw_core::Error as CoreError;

/// Process exit codes.
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{context}: {source}")]
    Core { context: String, source: CoreError },
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) | CliError::Io { .. } => EXIT_DATA,
            CliError::Core { source, .. } => core_exit_code(source),
        }
    }
}

fn core_exit_code(err: &CoreError) -> i32 {
    match err.root() {
        CoreError::InvalidArgument(_) => EXIT_USAGE,
        CoreError::InvalidSequence(_)
        | CoreError::DimensionMismatch { .. }
        | CoreError::InvalidPath(_)
        | CoreError::GridMismatch { .. } => EXIT_DATA,
        _ => EXIT_NUMERICAL,
    }
}

/// Attaches a short description of what was being done to a core error.
pub trait Context<T> {
    fn context(self, what: impl Into<String>) -> CliResult<T>;
}

impl<T> Context<T> for Result<T, CoreError> {
    fn context(self, what: impl Into<String>) -> CliResult<T> {
        self.map_err(|source| CliError::Core {
            context: what.into(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_class() {
        let data = CliError::Core {
            context: "x".into(),
            source: CoreError::DimensionMismatch { x: 1, y: 2 },
        };
        assert_eq!(data.exit_code(), EXIT_DATA);
        let num = CliError::Core {
            context: "x".into(),
            source: CoreError::AtIteration {
                iteration: 3,
                source: Box::new(CoreError::NotPositiveDefinite { lambda: 1.0 }),
            },
        };
        assert_eq!(num.exit_code(), EXIT_NUMERICAL);
        assert_eq!(CliError::Usage("u".into()).exit_code(), EXIT_USAGE);
    }
}
