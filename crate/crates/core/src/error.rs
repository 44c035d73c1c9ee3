use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row}, column `{column}`: cannot parse {value:?} as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("column `{0}` has no non-missing values")]
    AllMissing(String),

    #[error("unknown feature(s) {unknown:?}; valid names are {valid:?}")]
    UnknownFeature {
        unknown: Vec<String>,
        valid: Vec<String>,
    },

    #[error("{message}")]
    Validation { message: String, fields: Vec<String> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("labels must be binary (0/1), found class {0}")]
    NonBinaryLabels(usize),

    #[error("backward called without a cached training forward pass")]
    NoForwardCache,

    #[error("non-finite activation after {0} layer")]
    NonFiniteActivation(&'static str),

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("image error: {0}")]
    Image(String),

    #[error("not a model file (bad magic bytes)")]
    NotAModelFile,

    #[error("unsupported model format version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("model file checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },

    #[error("model file truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },

    #[error("malformed model file: {0}")]
    Malformed(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn shape(expected: impl ToString, found: impl ToString) -> Self {
        Error::ShapeMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
