use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed JSON in {path} at byte offset {offset}: {message}")]
    MalformedJson {
        path: PathBuf,
        offset: usize,
        message: String,
    },

    #[error("invalid commit at index {index}: {message}")]
    InvalidRecord { index: usize, message: String },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("corpus not found: {0}")]
    CorpusNotFound(PathBuf),

    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("model is not trained")]
    Untrained,

    #[error("issue position {position} out of range (corpus has {len} issues)")]
    IssueOutOfRange { position: usize, len: usize },

    #[error("commit {0} already has an explicit issue; explicit links are never relinked")]
    ExplicitIssue(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported {artifact} format version {found} (expected format version {expected})")]
    FormatVersion {
        artifact: &'static str,
        expected: u32,
        found: u32,
    },

    #[error("corrupt {artifact} artifact {path}: {message}")]
    CorruptArtifact {
        artifact: &'static str,
        path: PathBuf,
        message: String,
    },

    #[error("mismatched ids between predictions and labels: {0}")]
    MismatchedIds(String),

    #[error("unknown encoder `{0}` (built-in encoders: {builtin})", builtin = crate::classifier::BUILTIN_ENCODERS.join(", "))]
    UnknownEncoder(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
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
}
