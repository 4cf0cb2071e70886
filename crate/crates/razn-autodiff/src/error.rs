use thiserror::Error;

#[derive(Debug, Error)]
pub enum AutodiffError {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("batch normalization needs more than one value per channel in training mode")]
    DegenerateBatch,

    #[error("labels are not one-hot at flat position {position}")]
    NotOneHot { position: usize },

    #[error("non-finite gradient for parameter `{name}` (first bad index {index}, value {value})")]
    NonFiniteGradient {
        name: String,
        index: usize,
        value: f64,
    },

    #[error("unknown parameter `{0}`")]
    UnknownParam(String),

    #[error("duplicate parameter `{0}`")]
    DuplicateParam(String),

    #[error("checkpoint format error: {0}")]
    CheckpointFormat(String),

    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, AutodiffError>;
