//! Segmentation quality metrics (per-class IOU, mean IOU, inverse-frequency
//! weighted IOU, merged-group IOU) and analytic inference-cost accounting
//! (relative inference time in units of one reference segmentation pass).

#![forbid(unsafe_code)]

mod confusion;
mod cost;
mod error;

pub use confusion::{
    class_frequencies, iou_per_class, mean_iou, merged_iou, weighted_iou, ConfusionAccumulator,
};
pub use cost::{CostLedger, PatchCost};
pub use error::{MetricsError, Result};
