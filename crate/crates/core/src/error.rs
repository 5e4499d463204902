use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid link configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid tap event: {0}")]
    InvalidEvent(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("feature `{0}` selected twice")]
    DuplicateFeature(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("need at least {needed} rows, got {found}")]
    TooFewRows { needed: usize, found: usize },

    #[error("cluster cannot be bisected: all rows are identical")]
    IndivisibleCluster,

    #[error("requested {requested} clusters but the data has only {distinct} distinct rows")]
    TooManyClusters { requested: usize, distinct: usize },

    #[error("malformed CSV at line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error("config file: {0}")]
    ConfigFormat(#[from] toml::de::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn csv(line: usize, message: impl Into<String>) -> Self {
        Error::Csv {
            line,
            message: message.into(),
        }
    }
}
