use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed {record} record: {detail}")]
    MalformedRecord {
        line: usize,
        record: &'static str,
        detail: String,
    },

    #[error("no SEQRES records found")]
    NoSequence,

    #[error("chain {chain}: helix residue {residue} is absent from the chain numbering")]
    NumberingMismatch { chain: String, residue: String },

    #[error("corpus too small to split: {0} chain(s), need at least 2")]
    CorpusTooSmall(usize),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("no helix positions in corpus")]
    NoHelices,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("chain of length {len} is shorter than window {window}")]
    ChainTooShort { len: usize, window: usize },

    #[error("no chain is long enough for window {0}")]
    NoUsableChains(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("corpus line {line}: {detail}")]
    Corpus { line: usize, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
