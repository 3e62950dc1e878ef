use thiserror::Error;

/// Errors shared by every module in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("corpus parse error at line {line}: {message}")]
    CorpusParse { line: usize, message: String },
    #[error("sequence `{sequence}`: proposal feature dimension {found} does not match corpus dimension {expected}")]
    DimensionMismatch {
        sequence: String,
        expected: usize,
        found: usize,
    },
    #[error("sequence `{sequence}`: timestamps must be strictly increasing (frame {frame})")]
    NonMonotoneTimestamps { sequence: String, frame: usize },
    #[error("duplicate sequence id `{0}`")]
    DuplicateSequenceId(String),
    #[error("unknown atom id {atom} in visual assignments")]
    UnknownAtomId { atom: u32 },
    #[error("visual assignment references a missing target: sequence `{sequence}`, frame {frame}, proposal {proposal}")]
    DanglingAssignment {
        sequence: String,
        frame: usize,
        proposal: usize,
    },
    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),
    #[error("tf-idf is undefined for collections_containing = 0")]
    TfidfDomain,
    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 sequences, got {0}")]
    TooFewSequences(usize),
    #[error("affinity matrix is not symmetric nonnegative: {0}")]
    InvalidAffinity(String),
    #[error("power iteration did not converge within {0} iterations")]
    PowerIterationDiverged(usize),
    #[error("indicator vector has no nonzero entry")]
    ZeroIndicator,
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("segmentation error in sequence `{sequence}`: {message}")]
    InvalidSegmentation { sequence: String, message: String },
    #[error("ground truth has no labeled frames")]
    EmptyGroundTruth,
    #[error("missing confidence scores for label `{label}` in sequence `{sequence}`")]
    MissingConfidence { sequence: String, label: String },
    #[error("segmentations disagree: {0}")]
    SegmentationMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
