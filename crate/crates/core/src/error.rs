use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("symbol {symbol:?} at position {position} is not in the alphabet")]
    UnknownSymbol { symbol: char, position: usize },

    #[error("alphabet mismatch: {left:?} vs {right:?}")]
    AlphabetMismatch { left: String, right: String },

    #[error("invalid context: {0}")]
    InvalidContext(String),

    #[error("tree is incomplete (coverage {0})")]
    IncompleteTree(String),

    #[error("tree is inconsistent: {0}")]
    InconsistentTree(String),

    #[error("beta must be a positive finite number, got {0}")]
    InvalidBeta(f64),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),

    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("sequence of length {len} is too short (need at least {min})")]
    SequenceTooShort { len: usize, min: usize },

    #[error("invalid estimator configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("unknown taxon {0:?}")]
    UnknownTaxon(String),

    #[error("taxon sets differ: {0}")]
    TaxonMismatch(String),

    #[error("FASTA record {record:?}: {message}")]
    Fasta { record: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
