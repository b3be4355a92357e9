use std::path::PathBuf;

use thiserror::Error;

use crate::object_model::ObjectId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rank mismatch: shape has rank {shape}, chunk has rank {chunk}")]
    RankMismatch { shape: usize, chunk: usize },
    #[error("chunk dims {chunk:?} do not evenly divide shape {shape:?}")]
    NonDivisibleChunk { shape: Vec<u64>, chunk: Vec<u64> },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid object name: {0}")]
    InvalidName(String),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: Vec<u8> },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated record: need {needed} bytes, have {actual}")]
    TruncatedRecord { needed: usize, actual: usize },
    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("store at {root} already initialized with n_osd={existing}")]
    AlreadyInitialized { root: PathBuf, existing: u32 },
    #[error("no store at {0}")]
    NotInitialized(PathBuf),
    #[error("store root {0} is not empty")]
    RootNotEmpty(PathBuf),

    #[error("chunk {id}-{part} already exists")]
    ChunkExists { id: ObjectId, part: u32 },
    #[error("chunk {id}-{part} not found")]
    ChunkNotFound { id: ObjectId, part: u32 },
    #[error("corrupt chunk {path}: {reason}")]
    CorruptChunk { path: PathBuf, reason: String },

    #[error("object not found: {0}")]
    ObjectNotFound(String),
    #[error("corrupt metadata for {name}: {source}")]
    CorruptMetadata {
        name: String,
        #[source]
        source: Box<Error>,
    },

    #[error("part {part} out of range (chunk count {chunk_count})")]
    PartOutOfRange { part: u64, chunk_count: u64 },
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch { expected: Vec<u64>, actual: Vec<u64> },
    #[error("session for object {0} already committed")]
    AlreadyCommitted(ObjectId),
    #[error("object {id} is missing parts {missing:?}")]
    MissingChunks { id: ObjectId, missing: Vec<u32> },

    #[error("worker {worker} failed: {reason}")]
    WorkerFailure { worker: usize, reason: String },
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("incomplete phase {phase}: {reason}")]
    IncompletePhase { phase: u32, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for lookups that failed because the thing does not exist.
    pub fn is_not_found(&self) -> bool {
        matches!(
            self,
            Error::ObjectNotFound(_) | Error::ChunkNotFound { .. } | Error::NotInitialized(_)
        )
    }
}

pub(crate) trait IoResultExt<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoResultExt<T> for std::io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|e| Error::io(path, e))
    }
}
