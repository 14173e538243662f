use thiserror::Error;

/// Errors produced by the tensor, graph and solver routines.
#[derive(Debug, Error)]
pub enum MlrtgError {
    #[error("mode {mode} out of range for an order-{order} tensor")]
    InvalidMode { mode: usize, order: usize },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("need more than {k_nn} points for a {k_nn}-nearest-neighbour graph, got {points}")]
    TooFewPoints { points: usize, k_nn: usize },

    #[error("rank error: requested {requested}, available {available}")]
    Rank { requested: usize, available: usize },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("zero input: {0}")]
    ZeroInput(&'static str),

    #[error("columns are not orthonormal (deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MlrtgError>;

pub(crate) fn shape_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(MlrtgError::Shape(msg.into()))
}
