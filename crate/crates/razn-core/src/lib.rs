//! The selective-zoom segmentation mechanism: policy math (bounded zoom
//! probability, advantage-style reward, score-function gradient), the
//! alternating trainer that routes each sample's update to the coarse or
//! fine network by the sampled action, simulated-resolution baselines, and
//! the recursive zoom inference pipeline with per-patch cost accounting.

#![forbid(unsafe_code)]

mod common;
mod error;
mod eval;
mod infer;
mod policy;
mod sampler;
mod state;
mod trainer;

pub use common::{argmax_mask, degrade, one_hot, seg_loss};
pub use error::{CoreError, Result};
pub use eval::{
    evaluate, policy_cost_ratio, policy_probabilities, EvalOutcome, EvalReport, CARCINOMA,
    NON_CARCINOMA,
};
pub use infer::{infer_patch, infer_patch_baseline, InferOutcome, PolicyOverride, TraceEntry};
pub use policy::{
    bounded_prob, decide, decide_greedy, policy_objective, reward, sample_action,
    score_grad_seed, sigmoid, Action, PolicyDecision, RewardSign, ZoomConfig,
};
pub use sampler::{GridSampler, Split};
pub use state::{parse_policy_fingerprint, parse_seg_fingerprint, ModelKind, TrainState};
pub use trainer::{
    load_batch, load_sample, train_step, train_step_baseline, SampleReport, StepReport,
    TrainOptions, TrainSample,
};
