use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("masks have different extents: {a_h}x{a_w} vs {b_h}x{b_w}")]
    ExtentMismatch {
        a_h: usize,
        a_w: usize,
        b_h: usize,
        b_w: usize,
    },

    #[error("class index {value} out of range for {classes} classes")]
    BadClass { value: usize, classes: usize },

    #[error("metric undefined: {0}")]
    Undefined(String),
}

pub type Result<T> = std::result::Result<T, MetricsError>;
