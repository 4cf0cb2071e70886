//! Stable exit statuses: 0 ok, 2 configuration, 3 overwrite refused,
//! 4 numeric failure, 5 artifact mismatch, 1 anything else.

use razn_core::CoreError;
use razn_synthwsi::SynthError;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    OverwriteRefused(String),
    Numeric(String),
    Mismatch(String),
    Other(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::OverwriteRefused(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::Mismatch(_) => 5,
            CliError::Other(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::OverwriteRefused(m) => write!(f, "refusing to overwrite: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
            CliError::Mismatch(m) => write!(f, "artifact mismatch: {m}"),
            CliError::Other(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::BadSpec(m) => CliError::Config(m),
            SynthError::AlreadyExists(m) => CliError::OverwriteRefused(m),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::NonFiniteLoss { .. } => CliError::Numeric(e.to_string()),
            CoreError::Autodiff(razn_autodiff::AutodiffError::NonFiniteGradient { .. }) => {
                CliError::Numeric(e.to_string())
            }
            CoreError::ConfigMismatch(m) => CliError::Mismatch(m),
            CoreError::BadZoomConfig(m) | CoreError::EmptySampler(m) => CliError::Config(m),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<razn_pyramid::PyramidError> for CliError {
    fn from(e: razn_pyramid::PyramidError) -> Self {
        match e {
            razn_pyramid::PyramidError::Manifest(m) => CliError::Config(m),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}
