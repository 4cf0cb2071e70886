//! Network architectures for the zoom engine: the fully convolutional
//! segmentation backbone, the lightweight policy head, and an analytic
//! compute-cost model over both.

#![forbid(unsafe_code)]

mod config;
mod cost;
mod error;
pub mod layers;
mod policy;
mod seg;

pub use config::{PolicyNetConfig, SegNetConfig};
pub use cost::{conv_macs, policy_macs, seg_macs, CostModel};
pub use error::{NetError, Result};
pub use policy::{PolicyCache, PolicyNet, POLICY_MIN_INPUT};
pub use seg::{SegCache, SegNet};
