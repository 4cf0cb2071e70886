use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid generator spec: {0}")]
    BadSpec(String),

    #[error("output directory {0} already contains a dataset")]
    AlreadyExists(String),

    #[error(transparent)]
    Pyramid(#[from] razn_pyramid::PyramidError),

    #[error("io at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, SynthError>;
