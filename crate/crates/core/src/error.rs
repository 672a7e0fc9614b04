use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("PNG decode error at byte {offset}: {message}")]
    Decode { offset: u64, message: String },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("PNG encode error: {0}")]
    Encode(String),

    #[error(
        "image too small: extent {extent} along the differenced axis must exceed order {order}"
    )]
    ImageTooSmall { extent: usize, order: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize, usize),
        found: (usize, usize, usize),
    },

    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    #[error("{stage} diverged at iteration {iteration}: energy is not finite")]
    Divergence {
        stage: &'static str,
        iteration: usize,
    },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
}
