use thiserror::Error;

/// Errors raised by the selection, relabelling and training routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SsrError {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("label {label} at index {index} is outside 0..{num_classes}")]
    LabelOutOfRange {
        index: usize,
        label: usize,
        num_classes: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("vector at index {index} has (near) zero norm")]
    ZeroNormVector { index: usize },

    #[error("k = {k} neighbours requested but only {available} other samples exist")]
    KTooLarge { k: usize, available: usize },

    #[error("neighbour vote row {row} is all zero")]
    AllZeroRow { row: usize },

    #[error("two-component mixture fit degenerated (component variance {variance:e})")]
    DegenerateFit { variance: f64 },

    #[error("row {row} is not a valid probability vector")]
    InvalidProbabilityRow { row: usize },

    #[error("ground-truth labels are not available for this dataset")]
    MissingGroundTruth,

    #[error("non-finite value in input row {row}")]
    NonFiniteInput { row: usize },

    #[error("projection embedding at row {row} has zero norm")]
    ZeroNormEmbedding { row: usize },

    #[error("no sample was selected")]
    EmptySelection,

    #[error("asymmetric noise requires a class pair map")]
    MissingPairMap,

    #[error("invalid pair map: {0}")]
    InvalidPairMap(String),

    #[error("out-of-distribution pool has {available} rows, {required} required")]
    OodPoolTooSmall { required: usize, available: usize },

    #[error("bad magic bytes in embedding file")]
    BadMagic,

    #[error("unsupported embedding file version {0}")]
    UnsupportedVersion(u16),

    #[error("embedding file is truncated: expected {expected} bytes, found {found}")]
    TruncatedFile { expected: usize, found: usize },

    #[error("value out of range: {0}")]
    Range(String),

    #[error("model parameters became non-finite in epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SsrError {
    fn from(err: std::io::Error) -> Self {
        SsrError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SsrError>;
