use thiserror::Error;

use crate::types::PatchRef;

#[derive(Debug, Error)]
pub enum PyramidError {
    #[error("patch {patch:?} is out of bounds for level extent {level_h}x{level_w}")]
    OutOfBounds {
        patch: PatchRef,
        level_h: usize,
        level_w: usize,
    },

    #[error("no level above {level}; the pyramid has {levels} levels (max magnification reached)")]
    MaxMagnification { level: usize, levels: usize },

    #[error("extent {h}x{w} is not divisible by zoom rate {r}")]
    IndivisibleExtent { h: usize, w: usize, r: usize },

    #[error("stitch expected {expected} child masks of {h}x{w}, got {detail}")]
    StitchMismatch {
        expected: usize,
        h: usize,
        w: usize,
        detail: String,
    },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("tile {path} is corrupt: {detail}")]
    CorruptTile { path: String, detail: String },

    #[error("label value {value} at {path} exceeds class count {classes}")]
    BadLabel {
        value: u8,
        path: String,
        classes: usize,
    },

    #[error("io at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("png at {path}: {detail}")]
    Png { path: String, detail: String },
}

pub type Result<T> = std::result::Result<T, PyramidError>;

pub(crate) fn io_err(path: &std::path::Path, source: std::io::Error) -> PyramidError {
    PyramidError::Io {
        path: path.display().to_string(),
        source,
    }
}
