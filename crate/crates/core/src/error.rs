use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unknown entity type `{0}`")]
    UnknownType(String),
    #[error("invalid tag set: {0}")]
    InvalidTagSet(String),
    #[error("invalid sentence: {0}")]
    InvalidSentence(String),
    #[error("label id {id} out of range for {num_labels} labels")]
    LabelOutOfRange { id: usize, num_labels: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("label sequence uses a transition forbidden by the BIO mask at position {0}")]
    MaskedTransition(usize),
    #[error("position {0} has no allowed label")]
    EmptyAllowedSet(usize),
    #[error("gazetteer surface `{surface}` maps to both `{first}` and `{second}`")]
    ConflictingSurface {
        surface: String,
        first: String,
        second: String,
    },
    #[error("invalid gazetteer entry: {0}")]
    InvalidEntry(String),
    #[error("datasets are misaligned: {0}")]
    Misaligned(String),
    #[error("empty dataset: {0}")]
    EmptyDataset(&'static str),
    #[error("weak example {0} is missing corrected labels or confidence")]
    IncompleteWeakExample(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("loss became non-finite at epoch {epoch}, batch {batch}")]
    Divergence { epoch: usize, batch: usize },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
