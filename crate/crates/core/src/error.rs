use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by loaders and pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// The file is not in the expected format (bad header, missing property,
    /// wrong channel count, unparsable token).
    #[error("format error: {0}")]
    Format(String),

    /// The file parsed, but a value violates a type invariant.
    #[error("data error: {0}")]
    Data(String),

    #[error("unsupported camera model `{0}` (only PINHOLE and SIMPLE_PINHOLE are supported)")]
    UnsupportedModel(String),

    #[error("reference error: {0}")]
    Reference(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("range error: field `{field}` of class {class} is {value}, expected {expected}")]
    Range {
        field: String,
        class: String,
        value: f64,
        expected: String,
    },

    #[error("unmapped material classes on mesh: {0:?}")]
    UnmappedClass(Vec<u8>),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the failure is about the content of otherwise well-formed data
    /// rather than a missing or malformed file.
    pub fn is_data_violation(&self) -> bool {
        matches!(
            self,
            Error::Data(_)
                | Error::Reference(_)
                | Error::Shape(_)
                | Error::Range { .. }
                | Error::UnmappedClass(_)
                | Error::Domain(_)
                | Error::Input(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
