use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error("response column `{0}` not found")]
    MissingResponseColumn(String),
    #[error("duplicate feature name `{0}`")]
    DuplicateFeature(String),
    #[error("non-numeric value `{value}` at row {row}, column `{column}`")]
    NonNumeric { row: usize, column: String, value: String },
    #[error("missing response for sample `{0}`")]
    MissingResponse(String),
    #[error("every sample was dropped by cleaning")]
    EmptyTable,
    #[error("invalid shape: {0}")]
    Shape(String),
    #[error("label mismatch: {0}")]
    LabelMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("neighbor graph is disconnected (component sizes {sizes:?}); increase k")]
    Disconnected { sizes: Vec<usize> },
    #[error("zero off-diagonal distance between `{0}` and `{1}` cannot be log-transformed")]
    ZeroDistance(String, String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("malformed input: {0}")]
    Malformed(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical routines rather than the input data.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_) | Error::Disconnected { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
