use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the meta-embedding toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}, line {line}: {source}")]
    AtLine {
        path: PathBuf,
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("no sentence in the corpus matches `{0}`")]
    UnresolvedSentence(String),

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("duplicate record for sentence {sid} under source `{source_id}`")]
    DuplicateRecord { sid: u64, source_id: String },

    #[error("dimension mismatch for sentence {sid} under source `{source_id}`: expected {expected}, found {found}")]
    RecordDimension {
        sid: u64,
        source_id: String,
        expected: usize,
        found: usize,
    },

    #[error("word lists differ across sources for sentence {sid}")]
    WordMismatch { sid: u64 },

    #[error("invalid record for sentence {sid}: {message}")]
    InvalidRecord { sid: u64, message: String },

    #[error("unknown source `{0}`")]
    UnknownSource(String),

    #[error("sentence {sid} has no record for source `{source_id}`")]
    MissingSource { sid: u64, source_id: String },

    #[error("no embedding for sentence {0}")]
    MissingEmbedding(u64),

    #[error("unknown sentence {0}")]
    UnknownSentence(u64),

    #[error("word index {index} out of range for sentence {sid} with {len} words")]
    WordIndex { sid: u64, index: usize, len: usize },

    #[error("malformed STS row {row}: {message}")]
    StsRow { row: usize, message: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("zero-norm vector")]
    ZeroNorm,

    #[error("zero variance in {0}")]
    ZeroVariance(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
