//! Inference recursion: break/zoom outputs, cost arithmetic and the
//! stitched extents.

use razn_autodiff::{AdamConfig, LrSchedule, Tensor};
use razn_core::{
    argmax_mask, infer_patch, ModelKind, PolicyOverride, TrainState, ZoomConfig,
};
use razn_nets::{PolicyNetConfig, SegNetConfig};
use razn_pyramid::{PatchRef, PyramidDataset};
use razn_synthwsi::{generate, SynthSpec};

fn tiny_dataset(dir: &std::path::Path) -> PyramidDataset {
    let spec = SynthSpec {
        seed: 13,
        finest_dim: 512,
        levels: 3,
        zoom_rate: 2,
        tile_size: 128,
        ..SynthSpec::default()
    };
    generate(&spec, dir).unwrap()
}

fn state_with_zoom_budget(m: usize) -> TrainState {
    TrainState::new(
        ModelKind::Razn,
        77,
        SegNetConfig {
            input_size: 32,
            classes: 4,
            widths: [4, 8, 8, 8],
            blocks: [1, 1, 1, 1],
            dilated: true,
        },
        PolicyNetConfig {
            input_size: 32,
            widths: [4, 4, 8, 8],
            strides: [1, 2, 2, 1],
        },
        ZoomConfig {
            max_zoom_steps: m,
            ..ZoomConfig::default()
        },
        LrSchedule::default(),
        AdamConfig::default(),
    )
    .unwrap()
}

#[test]
fn forced_break_output_is_coarse_argmax() {
    let dir = tempfile::tempdir().unwrap();
    let ds = tiny_dataset(dir.path());
    let state = state_with_zoom_budget(1);
    let mut reader = ds.reader();
    let patch = PatchRef::new(0, 32, 64, 32, 32);

    let outcome = infer_patch(&state, &mut reader, &patch, PolicyOverride::ForceBreak).unwrap();
    assert_eq!(outcome.level, 0);
    assert_eq!((outcome.mask.h, outcome.mask.w), (32, 32));

    // reference: direct coarse-net argmax on the same window
    let image = reader.read_image(&patch).unwrap();
    let logits = state
        .seg_net
        .forward_eval(&state.seg0, &Tensor::stack(&[&image]))
        .unwrap();
    assert_eq!(outcome.mask, argmax_mask(&logits));

    assert_eq!(outcome.cost.total_seg(), 1);
    assert_eq!(outcome.cost.policy_units, 1);
    assert_eq!(outcome.trace.len(), 1);
}

#[test]
fn forced_zoom_stitches_four_children_one_level_in() {
    let dir = tempfile::tempdir().unwrap();
    let ds = tiny_dataset(dir.path());
    let state = state_with_zoom_budget(1);
    let mut reader = ds.reader();
    let patch = PatchRef::new(0, 0, 0, 32, 32);

    let outcome = infer_patch(&state, &mut reader, &patch, PolicyOverride::ForceZoom).unwrap();
    assert_eq!(outcome.level, 1);
    assert_eq!((outcome.mask.h, outcome.mask.w), (64, 64));
    assert_eq!(outcome.cost.total_seg(), 4);
    assert_eq!(outcome.cost.policy_units, 1);
    // children are segmented directly at the zoom budget: one policy entry
    assert_eq!(outcome.trace.len(), 1);

    // stitched output equals the four child predictions in place
    let zoomed = ds.zoom_region(&patch).unwrap();
    let grid = razn_pyramid::crop_grid(&zoomed, 2).unwrap();
    for (gi, child) in grid.children.iter().enumerate() {
        let image = reader.read_image(child).unwrap();
        let logits = state
            .seg_net
            .forward_eval(state.seg1.as_ref().unwrap(), &Tensor::stack(&[&image]))
            .unwrap();
        let child_mask = argmax_mask(&logits);
        let (gr, gc) = (gi / 2, gi % 2);
        for r in 0..32 {
            for c in 0..32 {
                assert_eq!(
                    outcome.mask.at(gr * 32 + r, gc * 32 + c),
                    child_mask.at(r, c),
                    "child {gi} at ({r},{c})"
                );
            }
        }
    }
}

#[test]
fn two_step_zoom_reaches_sixteen_leaves() {
    let dir = tempfile::tempdir().unwrap();
    let ds = tiny_dataset(dir.path());
    let state = state_with_zoom_budget(2);
    let mut reader = ds.reader();
    let patch = PatchRef::new(0, 0, 0, 32, 32);

    let outcome = infer_patch(&state, &mut reader, &patch, PolicyOverride::ForceZoom).unwrap();
    assert_eq!(outcome.level, 2);
    assert_eq!((outcome.mask.h, outcome.mask.w), (128, 128));
    // 16 leaf passes; 1 + 4 policy calls
    assert_eq!(outcome.cost.total_seg(), 16);
    assert_eq!(outcome.cost.policy_units, 5);
    assert_eq!(outcome.trace.len(), 5);
}

#[test]
fn max_magnification_forces_break_without_policy_cost() {
    let dir = tempfile::tempdir().unwrap();
    let ds = tiny_dataset(dir.path());
    let state = state_with_zoom_budget(3);
    let mut reader = ds.reader();
    // start at the finest level: nothing to zoom into
    let patch = PatchRef::new(2, 0, 0, 32, 32);
    let outcome = infer_patch(&state, &mut reader, &patch, PolicyOverride::Learned).unwrap();
    assert_eq!(outcome.level, 2);
    assert_eq!(outcome.cost.total_seg(), 1);
    assert_eq!(outcome.cost.policy_units, 0);
    assert!(outcome.trace.is_empty());
}

#[test]
fn learned_inference_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let ds = tiny_dataset(dir.path());
    let state = state_with_zoom_budget(1);
    let mut reader = ds.reader();
    let patch = PatchRef::new(0, 64, 32, 32, 32);
    let a = infer_patch(&state, &mut reader, &patch, PolicyOverride::Learned).unwrap();
    let b = infer_patch(&state, &mut reader, &patch, PolicyOverride::Learned).unwrap();
    assert_eq!(a.mask, b.mask);
    assert_eq!(a.cost, b.cost);
    assert_eq!(a.trace.len(), b.trace.len());
    for (x, y) in a.trace.iter().zip(b.trace.iter()) {
        assert_eq!(x.decision.action, y.decision.action);
        assert_eq!(x.decision.p_tilde, y.decision.p_tilde);
    }
}
