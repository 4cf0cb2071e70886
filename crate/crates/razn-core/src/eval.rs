//! Evaluation over a patch split. Every method's predictions are projected
//! to the finest annotation level by nearest-neighbor replication, so all
//! models are scored against one canonical ground truth regardless of which
//! level they stopped at.

use razn_metrics::{
    class_frequencies, iou_per_class, mean_iou, merged_iou, weighted_iou, ConfusionAccumulator,
    CostLedger,
};
use razn_nets::CostModel;
use razn_pyramid::{PatchRef, PyramidDataset};

use crate::error::Result;
use crate::infer::{infer_patch, infer_patch_baseline, PolicyOverride, TraceEntry};
use crate::state::{ModelKind, TrainState};

pub const NON_CARCINOMA: [usize; 2] = [0, 1];
pub const CARCINOMA: [usize; 2] = [2, 3];

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub patches: usize,
    pub per_class_iou: Vec<Option<f64>>,
    pub miou: f64,
    pub weighted_iou: f64,
    pub non_carcinoma_iou: f64,
    pub carcinoma_iou: f64,
    pub relative_time_mean: f64,
    pub relative_time_std: f64,
    pub policy_ratio: f64,
    pub zoom_fraction: f64,
}

pub struct EvalOutcome {
    pub report: EvalReport,
    pub trace: Vec<TraceEntry>,
}

/// The policy-pass cost share implied by the state's own configurations at
/// the evaluation patch size.
pub fn policy_cost_ratio(state: &TrainState, patch_size: usize) -> f64 {
    match &state.policy_net {
        Some(pn) => {
            CostModel::new(&state.seg_net.cfg, &pn.cfg, patch_size, patch_size).ratio()
        }
        None => 0.0,
    }
}

pub fn evaluate(
    state: &TrainState,
    ds: &PyramidDataset,
    refs: &[PatchRef],
    overide: PolicyOverride,
) -> Result<EvalOutcome> {
    assert!(!refs.is_empty(), "evaluation needs patches");
    let mut reader = ds.reader();
    let finest = ds.levels() - 1;
    let rate = ds.zoom_rate();
    let mut confusion = ConfusionAccumulator::new(ds.num_classes());
    let mut ledger = CostLedger::new();
    let mut trace = Vec::new();
    let mut zoomed_patches = 0usize;

    for patch in refs {
        let outcome = match state.kind {
            ModelKind::Razn => infer_patch(state, &mut reader, patch, overide)?,
            _ => infer_patch_baseline(state, &mut reader, patch)?,
        };
        if outcome
            .trace
            .first()
            .map(|t| t.decision.action == crate::policy::Action::Zoom)
            .unwrap_or(false)
        {
            zoomed_patches += 1;
        }

        // project the prediction to the finest level and score it there
        let factor = rate.pow((finest - outcome.level) as u32);
        let projected = if factor > 1 {
            razn_pyramid::replicate(&outcome.mask, factor)
        } else {
            outcome.mask
        };
        let scale = rate.pow((finest - patch.level) as u32);
        let truth_ref = PatchRef::new(
            finest,
            patch.row * scale,
            patch.col * scale,
            patch.h * scale,
            patch.w * scale,
        );
        let truth = reader.read_labels(&truth_ref)?;
        confusion.record(&truth.data, &projected.data, (truth.h, truth.w))?;

        ledger.push(outcome.cost);
        trace.extend(outcome.trace);
    }

    let ratio = policy_cost_ratio(state, refs[0].h);
    let (rel_mean, rel_std) = ledger.relative_time(ratio);
    let freqs = class_frequencies(&confusion);
    let report = EvalReport {
        patches: refs.len(),
        per_class_iou: iou_per_class(&confusion),
        miou: mean_iou(&confusion)?,
        weighted_iou: weighted_iou(&confusion, &freqs)?,
        non_carcinoma_iou: merged_iou(&confusion, &NON_CARCINOMA)?,
        carcinoma_iou: merged_iou(&confusion, &CARCINOMA)?,
        relative_time_mean: rel_mean,
        relative_time_std: rel_std,
        policy_ratio: ratio,
        zoom_fraction: zoomed_patches as f64 / refs.len() as f64,
    };
    Ok(EvalOutcome { report, trace })
}

/// Mean bounded zoom probability per patch, eval mode. Used to relate the
/// learned policy to patch contents.
pub fn policy_probabilities(
    state: &TrainState,
    ds: &PyramidDataset,
    refs: &[PatchRef],
) -> Result<Vec<f64>> {
    let mut reader = ds.reader();
    let policy_net = state.policy_net.as_ref().expect("zoom model has a policy");
    let policy_store = state.policy.as_ref().expect("policy store");
    let mut out = Vec::with_capacity(refs.len());
    for patch in refs {
        let image = reader.read_image(patch)?;
        let batch = razn_autodiff::Tensor::stack(&[&image]);
        let score = policy_net.forward_eval(policy_store, &batch)?[0] as f64;
        out.push(crate::policy::bounded_prob(
            crate::policy::sigmoid(score),
            state.zoom.alpha,
        ));
    }
    Ok(out)
}
