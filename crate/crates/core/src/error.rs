use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("unknown topic `{0}`")]
    UnknownTopic(String),

    #[error("annotations reference unknown arguments: {}", .0.join(", "))]
    UnknownArguments(Vec<String>),

    #[error("concept `{0}` is not a node of the concept graph")]
    UnknownConcept(String),

    #[error("embedding store is empty")]
    EmptyEmbeddings,

    #[error("no embedding for `{0}`")]
    MissingEmbedding(String),

    #[error("embedding dimension mismatch for `{label}`: expected {expected}, got {actual}")]
    DimensionMismatch {
        label: String,
        expected: usize,
        actual: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("probability row {row:?} is not a distribution")]
    InvalidDistribution { row: [f64; 3] },

    #[error("channel {channel} is undefined for aggregation family {family}")]
    UndefinedChannel { family: String, channel: String },

    #[error("signature mismatch: `{left}` vs `{right}`")]
    SignatureMismatch { left: String, right: String },

    #[error("labels contain a single class; ROC-AUC needs positives and negatives")]
    SingleClass,

    #[error("no pairable items for reliability computation")]
    NoPairableItems,

    #[error("missing scores for annotated pairs: {}", .0.join(", "))]
    MissingScores(Vec<String>),

    #[error("template `{template}` has unfilled placeholder `{placeholder}`")]
    UnfilledPlaceholder { template: String, placeholder: String },

    #[error("could not parse reply for {context}: {raw:?}")]
    UnparseableReply { context: String, raw: String },

    #[error("request failed with status {status}: {excerpt}")]
    HttpStatus { status: u16, excerpt: String },

    #[error("transport error: {0}")]
    Transport(String),

    #[error("LLM client is not configured: {0}")]
    NotConfigured(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Wraps the error with a human-readable location such as an argument id.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
