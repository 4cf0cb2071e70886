use thiserror::Error;

use razn_pyramid::PatchRef;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("non-finite loss on patch {patch:?} ({which})")]
    NonFiniteLoss { patch: PatchRef, which: &'static str },

    #[error("checkpoint does not match the run configuration: {0}")]
    ConfigMismatch(String),

    #[error("checkpoint is missing {0}")]
    CheckpointIncomplete(String),

    #[error("invalid zoom configuration: {0}")]
    BadZoomConfig(String),

    #[error("sampler has no usable patches: {0}")]
    EmptySampler(String),

    #[error(transparent)]
    Autodiff(#[from] razn_autodiff::AutodiffError),

    #[error(transparent)]
    Net(#[from] razn_nets::NetError),

    #[error(transparent)]
    Pyramid(#[from] razn_pyramid::PyramidError),

    #[error(transparent)]
    Metrics(#[from] razn_metrics::MetricsError),
}

pub type Result<T> = std::result::Result<T, CoreError>;
