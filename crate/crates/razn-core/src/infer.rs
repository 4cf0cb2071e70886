//! Recursive selective-zoom inference. The policy looks at the patch; on
//! break the coarse net segments it, on zoom the window is retrieved one
//! level finer, cropped into rate^2 children and recursed. Children at the
//! zoom budget are segmented directly by the fine net without a policy
//! call, and the budget is also capped by the remaining pyramid levels.

use razn_metrics::PatchCost;
use razn_pyramid::{crop_grid, replicate, stitch, IntMask, PatchReader, PatchRef};

use crate::common::argmax_mask;
use crate::error::Result;
use crate::policy::{decide_greedy, Action, PolicyDecision};
use crate::state::{ModelKind, TrainState};

/// How inference chooses actions: the learned deterministic rule
/// (zoom when p~ > 0.5) or a forced action for tests and cost benches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PolicyOverride {
    #[default]
    Learned,
    ForceBreak,
    ForceZoom,
}

#[derive(Debug, Clone)]
pub struct TraceEntry {
    pub patch: PatchRef,
    pub decision: PolicyDecision,
}

#[derive(Debug)]
pub struct InferOutcome {
    /// Prediction at the finest level the recursion touched.
    pub mask: IntMask,
    pub level: usize,
    pub trace: Vec<TraceEntry>,
    pub cost: PatchCost,
}

/// Segmentation-only prediction of one window through a given store.
fn segment(
    state: &TrainState,
    store: &razn_autodiff::ParamStore,
    reader: &mut PatchReader<'_>,
    patch: &PatchRef,
) -> Result<IntMask> {
    let image = reader.read_image(patch)?;
    let batch = razn_autodiff::Tensor::stack(&[&image]);
    let logits = state.seg_net.forward_eval(store, &batch)?;
    Ok(argmax_mask(&logits))
}

fn infer_rec(
    state: &TrainState,
    reader: &mut PatchReader<'_>,
    patch: &PatchRef,
    depth: usize,
    overide: PolicyOverride,
    trace: &mut Vec<TraceEntry>,
    cost: &mut PatchCost,
) -> Result<(IntMask, usize)> {
    let seg_store = if depth == 0 {
        &state.seg0
    } else {
        state.seg1.as_ref().unwrap_or(&state.seg0)
    };
    let can_zoom = depth < state.zoom.max_zoom_steps
        && patch.level + 1 < reader.dataset().levels();

    if !can_zoom {
        // zoom budget spent or maximum magnification: segment directly
        let mask = segment(state, seg_store, reader, patch)?;
        cost.add_seg(patch.level, 1);
        return Ok((mask, patch.level));
    }

    // policy evaluation (counted even when the action is overridden)
    let image = reader.read_image(patch)?;
    let batch = razn_autodiff::Tensor::stack(&[&image]);
    let policy_net = state.policy_net.as_ref().expect("zoom model has a policy");
    let policy_store = state.policy.as_ref().expect("policy store");
    let score = policy_net.forward_eval(policy_store, &batch)?[0] as f64;
    let mut decision = decide_greedy(score, state.zoom.alpha);
    match overide {
        PolicyOverride::Learned => {}
        PolicyOverride::ForceBreak => decision.action = Action::Break,
        PolicyOverride::ForceZoom => decision.action = Action::Zoom,
    }
    cost.add_policy(1);
    trace.push(TraceEntry {
        patch: *patch,
        decision,
    });

    match decision.action {
        Action::Break => {
            let mask = segment(state, seg_store, reader, patch)?;
            cost.add_seg(patch.level, 1);
            Ok((mask, patch.level))
        }
        Action::Zoom => {
            let rate = state.zoom.zoom_rate;
            let zoomed = reader.dataset().zoom_region(patch)?;
            let grid = crop_grid(&zoomed, rate)?;
            let mut child_masks = Vec::with_capacity(grid.children.len());
            let mut deepest = patch.level + 1;
            for child in &grid.children {
                let (mask, level) =
                    infer_rec(state, reader, child, depth + 1, overide, trace, cost)?;
                deepest = deepest.max(level);
                child_masks.push((mask, level));
            }
            // children that broke earlier are replicated down to the
            // deepest level touched among the siblings, then stitched
            let rate_pow = |from: usize| rate.pow((deepest - from) as u32);
            let normalized: Vec<IntMask> = child_masks
                .into_iter()
                .map(|(mask, level)| {
                    if level == deepest {
                        mask
                    } else {
                        replicate(&mask, rate_pow(level))
                    }
                })
                .collect();
            let mask = stitch(&normalized, rate)?;
            Ok((mask, deepest))
        }
    }
}

/// Runs selective-zoom inference on one patch.
pub fn infer_patch(
    state: &TrainState,
    reader: &mut PatchReader<'_>,
    patch: &PatchRef,
    overide: PolicyOverride,
) -> Result<InferOutcome> {
    assert_eq!(state.kind, ModelKind::Razn, "selective inference needs the zoom model");
    reader.dataset().check_ref(patch)?;
    let mut trace = Vec::new();
    let mut cost = PatchCost::default();
    let (mask, level) = infer_rec(state, reader, patch, 0, overide, &mut trace, &mut cost)?;
    Ok(InferOutcome {
        mask,
        level,
        trace,
        cost,
    })
}

/// Single-pass baseline prediction for one patch: degrade to the simulated
/// resolution, segment with the single store. Costs one seg unit.
pub fn infer_patch_baseline(
    state: &TrainState,
    reader: &mut PatchReader<'_>,
    patch: &PatchRef,
) -> Result<InferOutcome> {
    let factor = match state.kind {
        ModelKind::Scale1 => 4,
        ModelKind::Scale2 => 2,
        // the multi-scale baseline evaluates at the finer simulated scale
        ModelKind::MultiScale => 2,
        ModelKind::Razn => panic!("baseline inference on the zoom model"),
    };
    let image = reader.read_image(patch)?;
    let batch = razn_autodiff::Tensor::stack(&[&image]);
    let degraded = crate::common::degrade(&batch, factor)?;
    let logits = state.seg_net.forward_eval(&state.seg0, &degraded)?;
    let mask = argmax_mask(&logits);
    let mut cost = PatchCost::default();
    cost.add_seg(patch.level, 1);
    Ok(InferOutcome {
        mask,
        level: patch.level,
        trace: Vec::new(),
        cost,
    })
}
