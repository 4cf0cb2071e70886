use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("input {h}x{w} is not divisible by the output stride {stride}")]
    Indivisible { h: usize, w: usize, stride: usize },

    #[error("input {h}x{w} is below the minimum {min}x{min}")]
    TooSmall { h: usize, w: usize, min: usize },

    #[error("input has {got} channels, expected {expected}")]
    ChannelMismatch { got: usize, expected: usize },

    #[error(transparent)]
    Autodiff(#[from] razn_autodiff::AutodiffError),
}

pub type Result<T> = std::result::Result<T, NetError>;
