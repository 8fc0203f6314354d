use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { offset: usize },

    #[error("token stream is empty")]
    EmptyTokens,

    #[error("corpus is empty after preprocessing")]
    EmptyCorpus,

    #[error("duplicate slice label `{0}`")]
    DuplicateSliceLabel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("anchor set `{0}` is empty after resolution")]
    EmptyAnchorSet(&'static str),

    #[error("word `{word}` resolves to `{resolved}`, which is requested in both `{first}` and `{second}`")]
    AnchorCollision {
        word: String,
        resolved: String,
        first: &'static str,
        second: &'static str,
    },

    #[error(
        "row {row} has value {value} on the interpretable dimension, outside the truncated support"
    )]
    SupportViolation { row: usize, value: f64 },

    #[error("context window is empty")]
    EmptyContext,

    #[error("vocabulary needs at least two word types, got {0}")]
    VocabularyTooSmall(usize),

    #[error("id {id} is out of range for a vocabulary of {size} types")]
    IdOutOfRange { id: usize, size: usize },

    #[error("shape mismatch: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    ShapeMismatch {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("non-finite parameter in {matrix} row {row} at step {step}")]
    Divergence {
        step: u64,
        matrix: String,
        row: usize,
    },

    #[error("no hold-out word resolved against the vocabulary")]
    EmptyHoldout,

    #[error("word `{0}` is not in the vocabulary")]
    UnresolvedWord(String),

    #[error("embedding of `{0}` has zero norm")]
    ZeroNorm(String),

    #[error("axis has zero norm")]
    ZeroAxis,

    #[error("dynamic training needs at least two time slices, got {0}")]
    TooFewSlices(usize),
}
