use std::path::PathBuf;

/// Failures reading or writing files.
#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("header field `{field}`: {message}")]
    Header { field: String, message: String },
    #[error("payload size mismatch: expected {expected} bytes, found {actual}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("unsupported voxel type `{0}`")]
    UnsupportedType(String),
    #[error("unrecognized file extension: {}", .0.display())]
    UnknownExtension(PathBuf),
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Volume(#[from] csd_core::Error),
}

impl FormatError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FormatError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn header(field: &str, message: impl Into<String>) -> Self {
        FormatError::Header {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = FormatError> = std::result::Result<T, E>;
