use std::path::PathBuf;

/// Process exit status for a successful run.
pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    /// Invalid or inconsistent configuration; the message names the field.
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] qmetro_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl AppError {
    pub fn config(msg: impl Into<String>) -> Self {
        AppError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) | AppError::Json { .. } => EXIT_CONFIG,
            AppError::Core(qmetro_core::Error::Capacity { .. }) => EXIT_CAPACITY,
            AppError::Core(qmetro_core::Error::Argument(_)) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
