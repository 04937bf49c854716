use std::path::PathBuf;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate dialogue id `{0}`")]
    DuplicateId(String),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("degenerate corpus: {0}")]
    DegenerateCorpus(String),
    #[error("insufficient data for {requested} instances; max achievable balanced size is {achievable}")]
    InsufficientData { requested: usize, achievable: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("unknown bot `{0}`")]
    UnknownBot(String),
    #[error("token id {id} out of range for vocabulary of size {size}")]
    TokenOutOfRange { id: usize, size: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("topic model has not been trained")]
    UntrainedModel,
    #[error("bad checkpoint magic")]
    BadMagic,
    #[error("checkpoint format version {found} is not supported (reader supports {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },
    #[error("truncated checkpoint: {0}")]
    Truncated(String),
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
