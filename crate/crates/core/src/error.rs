use crate::types::ModeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("invalid stream spec field `{field}`: {reason}")]
    InvalidSpec { field: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value at coordinate {index}")]
    NonFinite { index: usize },

    #[error("mixture has no modes")]
    EmptyMixture,

    #[error("mixture weights sum to {0}, cannot normalize")]
    DegenerateWeights(f64),

    #[error("unknown mode id {0}")]
    UnknownMode(ModeId),

    #[error("cannot merge modes with zero combined weight")]
    ZeroWeightMerge,

    #[error("distance {distance} is not below the match threshold {theta_match}")]
    NotAHit { distance: f64, theta_match: f64 },

    #[error("need at least {needed} samples, got {found}")]
    NotEnoughSamples { needed: usize, found: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("row {row}: {message}")]
    BadRow { row: usize, message: String },

    #[error("unsupported snapshot version {found} (expected {expected})")]
    SnapshotVersion { expected: u32, found: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
