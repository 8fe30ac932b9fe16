use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    FileFormat {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("integrity violation: {0}")]
    Integrity(String),

    #[error("group `{0}` contains no clips")]
    EmptyGroup(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("too few points: need at least {needed}, got {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("at least two clusters are required")]
    SingleCluster,

    #[error("cluster {0} has no members")]
    EmptyCluster(usize),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("leave-one-podcast-out needs at least two podcasts, found {0}")]
    SinglePodcast(usize),

    #[error("too few clips: need at least {needed}, got {found}")]
    TooFewClips { needed: usize, found: usize },

    #[error("too few speakers: need at least {needed}, got {found}")]
    TooFewSpeakers { needed: usize, found: usize },

    #[error("need {needed} dominant speakers, found {found}")]
    InsufficientDominantSpeakers { needed: usize, found: usize },

    #[error("prediction coverage mismatch: {0}")]
    CoverageMismatch(String),

    #[error("cannot train classifier: {0}")]
    DegenerateClass(String),

    #[error("invalid synthetic corpus spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn format(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::FileFormat {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Errors caused by malformed input rather than by the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}
