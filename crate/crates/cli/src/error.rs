use std::path::PathBuf;

/// Harness failures, grouped by the exit code they map to.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("line {line}: {key}: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: smsplit_core::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{message}")]
    Partial { message: String, exit_code: i32 },
}

impl HarnessError {
    /// 1 validation, 2 solver, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } | HarnessError::Validation(_) => 1,
            HarnessError::Core { source, .. } if source.is_validation() => 1,
            HarnessError::Core { .. } => 2,
            HarnessError::Io { .. } => 3,
            HarnessError::Partial { exit_code, .. } => *exit_code,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| HarnessError::Io { path, source }
    }

    pub(crate) fn core(context: impl Into<String>) -> impl FnOnce(smsplit_core::Error) -> Self {
        let context = context.into();
        move |source| HarnessError::Core { context, source }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
