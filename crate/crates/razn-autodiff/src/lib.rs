//! Differentiable-operation substrate for the segmentation engine: dense
//! tensors, the handful of ops the networks need (each with an explicit
//! backward), Adam with a step-wise learning-rate schedule, deterministic
//! initialization and a byte-exact checkpoint format.
//!
//! Training runs in f32; every op is also instantiable in f64 so gradients
//! can be verified against central finite differences.

#![forbid(unsafe_code)]

mod checkpoint;
mod element;
mod error;
pub mod fdcheck;
mod init;
mod ops;
mod schedule;
mod store;
mod tensor;

pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointMeta, CHECKPOINT_MAGIC};
pub use element::Element;
pub use error::{AutodiffError, Result};
pub use init::{conv_weight, fan_in_normal, linear_weight};
pub use ops::*;
pub use schedule::LrSchedule;
pub use store::{tensor_bits_eq, AdamConfig, Param, ParamStore};
pub use tensor::Tensor;
