use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("mode {mode} out of range for a tensor with {order} modes")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("mode {0} listed more than once")]
    DuplicateMode(usize),

    #[error("invalid rank: {0}")]
    InvalidRank(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("class {0} has no samples")]
    EmptyClass(usize),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("point is not on the Stiefel manifold (max |XᵀX - I| = {0:e})")]
    Infeasible(f64),

    #[error("singular linear system in Cayley step")]
    Singular,

    #[error("non-finite objective value")]
    NonFinite,

    #[error("dense scatter dimension {dim} exceeds ceiling {ceiling}")]
    TooLarge { dim: usize, ceiling: usize },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
