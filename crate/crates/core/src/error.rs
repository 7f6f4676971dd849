use thiserror::Error;

/// Errors raised by the simulator and its post-processing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("orbital matrix is rank deficient (smallest |R_nn| = {min_diag:e})")]
    RankDeficient { min_diag: f64 },

    #[error("jump on bond {bond} has no overlap with any occupied orbital")]
    InvalidJump { bond: usize },

    #[error("jump probability {probability} on bond {bond} is not below 1; reduce dt")]
    StepTooLarge { bond: usize, probability: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite matrix entries")]
    NonFinite,

    #[error("Fock-space oracle limited to L <= {max}, got L = {l}")]
    SystemTooLarge { l: usize, max: usize },

    #[error("zero-norm state after jump on bond {bond}")]
    ZeroNorm { bond: usize },

    #[error("analysis: {0}")]
    Analysis(String),

    #[error("{failed} of {total} trajectories failed (limit is 1%)")]
    TooManyFailures { failed: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("malformed input {path}: {message}")]
    Format { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
