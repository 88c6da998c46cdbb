use std::path::PathBuf;

use thiserror::Error;

use crate::network::{UserId, VertexId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown road vertex {0}")]
    UnknownVertex(VertexId),
    #[error("unknown user {0}")]
    UnknownUser(UserId),
    #[error("topic vector has {got} entries, expected {expected}")]
    TopicLength { expected: usize, got: usize },
    #[error("invalid topic vector: {0}")]
    InvalidTopics(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("network is empty")]
    EmptyNetwork,
    #[error("query {index} in batch is invalid: {source}")]
    BatchQuery {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("oracle candidate pool has {size} users, cap is {cap}")]
    PoolTooLarge { size: usize, cap: usize },
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Failures while reading a serialized index.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("bad magic bytes {0:?}, expected \"SSIX\"")]
    BadMagic([u8; 4]),
    #[error("index format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("index stream truncated while reading {context}")]
    Truncated { context: &'static str },
    #[error("malformed index: {0}")]
    Malformed(String),
}

/// Failures while loading the TSV network format.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("{file}:{line}: malformed row: {message}")]
    MalformedRow {
        file: String,
        line: u64,
        message: String,
    },
    #[error("{file}:{line}: {what} {id} references unknown {target} {target_id}")]
    DanglingReference {
        file: String,
        line: u64,
        what: &'static str,
        id: u64,
        target: &'static str,
        target_id: u64,
    },
}
