use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A file or string did not have the expected structure.
    #[error("input format: {field}: {message}")]
    InputFormat { field: String, message: String },

    #[error("unsupported schema_version {found} (expected {expected})")]
    SchemaVersion { found: i64, expected: i64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("vocabulary is empty after feature selection")]
    EmptyVocabulary,

    #[error("store integrity: {path}:{line}: {message}")]
    StoreIntegrity {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("store is locked: {0}")]
    StoreLocked(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InputFormat {
            field: field.into(),
            message: message.into(),
        }
    }
}
