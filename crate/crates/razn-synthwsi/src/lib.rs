//! Deterministic synthetic slide-pyramid generator. Produces histology-like
//! data with sparse abnormal regions on glass, class imbalance, annotation
//! boundary jitter, and carcinoma textures that only become distinguishable
//! once zoomed past the coarsest level.

#![forbid(unsafe_code)]

mod confusability;
mod error;
mod model;
mod rng;
mod spec;
mod texture;

mod generate;

pub use confusability::{confusability_report, ConfusabilityReport, LevelSeparability};
pub use error::{Result, SynthError};
pub use generate::{generate, output_occupied};
pub use model::RegionModel;
pub use spec::{Arrangement, ClassTexture, SynthSpec, TextureParams};
