use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A position inside an input file, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{kind} not found: {id}")]
    NotFound { kind: &'static str, id: String },

    #[error("malformed XML at {location}: {message}")]
    Xml { location: Location, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),

    #[error("lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },

    #[error("{file} line {line}: {message}")]
    Tsv {
        file: &'static str,
        line: usize,
        message: String,
    },

    #[error("query is empty after stopword removal")]
    EmptyQuery,

    #[error("no concept chosen")]
    NothingChosen,

    #[error("concept {0} is not among the candidates")]
    NotACandidate(u32),

    #[error("vector dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unknown videos in judgments: {}", .0.join(", "))]
    UnknownVideos(Vec<String>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn not_found(kind: &'static str, id: impl ToString) -> Self {
        Error::NotFound {
            kind,
            id: id.to_string(),
        }
    }
}
