//! Alternating training. Per sample: evaluate the coarse loss on the patch
//! and the fine loss on its zoomed children, sample the zoom action, form
//! the advantage-style reward, and update the policy every batch while the
//! sampled action routes each sample's segmentation update to exactly one
//! of the coarse or fine networks.

use rayon::prelude::*;

use razn_autodiff::{softmax_cross_entropy_backward, softmax_cross_entropy_map, Tensor};
use razn_pyramid::{crop_grid, IntMask, PatchReader, PatchRef};

use crate::common::one_hot;
use crate::error::{CoreError, Result};
use crate::policy::{decide, Action, PolicyDecision};
use crate::state::{ModelKind, TrainState};

/// One training sample: the coarse patch plus, when zooming is trained, its
/// children one level in.
pub struct TrainSample {
    pub patch: PatchRef,
    pub image: Tensor<f32>,
    pub labels: IntMask,
    pub child_images: Vec<Tensor<f32>>,
    pub child_labels: Vec<IntMask>,
}

/// Reads a sample from the pyramid; with `with_children` the zoomed window
/// is cropped into its rate^2 children at the next level.
pub fn load_sample(
    reader: &mut PatchReader<'_>,
    patch: &PatchRef,
    with_children: bool,
    rate: usize,
) -> Result<TrainSample> {
    let (image, labels) = reader.read_patch(patch)?;
    let mut child_images = Vec::new();
    let mut child_labels = Vec::new();
    if with_children {
        let zoomed = reader.dataset().zoom_region(patch)?;
        let grid = crop_grid(&zoomed, rate)?;
        for child in &grid.children {
            let (img, lab) = reader.read_patch(child)?;
            child_images.push(img);
            child_labels.push(lab);
        }
    }
    Ok(TrainSample {
        patch: *patch,
        image,
        labels,
        child_images,
        child_labels,
    })
}

pub fn load_batch(
    reader: &mut PatchReader<'_>,
    refs: &[PatchRef],
    with_children: bool,
    rate: usize,
) -> Result<Vec<TrainSample>> {
    refs.iter()
        .map(|r| load_sample(reader, r, with_children, rate))
        .collect()
}

#[derive(Debug, Clone)]
pub struct SampleReport {
    pub patch: PatchRef,
    pub decision: PolicyDecision,
    pub j0: f64,
    pub j1: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, Default)]
pub struct StepReport {
    pub step: u64,
    pub lr: f64,
    pub samples: Vec<SampleReport>,
    pub j0_mean: f64,
    pub j1_mean: f64,
    pub zoom_fraction: f64,
    pub reward_mean: f64,
    /// Plain segmentation loss for baseline training steps.
    pub loss_mean: f64,
    pub touched_seg0: bool,
    pub touched_seg1: bool,
    pub touched_policy: bool,
}

/// Test hook: overrides every sampled action in a step.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrainOptions {
    pub force_action: Option<Action>,
}

fn batch_of_images(images: &[&Tensor<f32>]) -> Tensor<f32> {
    Tensor::stack(images)
}

/// Reward-side loss probe: mean cross entropy of one image batch against
/// index labels, computed with batch-statistics normalization and no state
/// change — what a training pass would measure, minus the side effects.
fn eval_loss(
    state: &TrainState,
    store: &razn_autodiff::ParamStore,
    images: &[&Tensor<f32>],
    labels: &[&IntMask],
) -> Result<f64> {
    let batch = batch_of_images(images);
    let logits = state.seg_net.forward_stats(store, &batch)?;
    let targets = one_hot(labels, state.seg_net.cfg.classes);
    let out = softmax_cross_entropy_map(&logits, &targets)?;
    Ok(out.loss as f64)
}

/// One alternating-training step over a batch.
pub fn train_step(
    state: &mut TrainState,
    samples: &[TrainSample],
    opts: TrainOptions,
) -> Result<StepReport> {
    assert_eq!(state.kind, ModelKind::Razn, "train_step drives the zoom model");
    assert!(!samples.is_empty(), "empty batch");
    for s in samples {
        assert!(
            !s.child_images.is_empty(),
            "zoom training needs zoomable samples"
        );
    }
    let classes = state.seg_net.cfg.classes;
    let lr = state.lr();

    // reward losses, eval mode, parallel over samples: J0 on the patch
    // through the coarse net, J1 as the mean over the zoomed children
    // through the fine net
    let losses: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|s| -> Result<(f64, f64)> {
            let j0 = eval_loss(state, &state.seg0, &[&s.image], &[&s.labels])?;
            let child_imgs: Vec<&Tensor<f32>> = s.child_images.iter().collect();
            let child_labs: Vec<&IntMask> = s.child_labels.iter().collect();
            let j1 = eval_loss(
                state,
                state.seg1.as_ref().expect("seg1"),
                &child_imgs,
                &child_labs,
            )?;
            Ok((j0, j1))
        })
        .collect::<Result<_>>()?;

    for (s, &(j0, j1)) in samples.iter().zip(losses.iter()) {
        if !j0.is_finite() {
            return Err(CoreError::NonFiniteLoss {
                patch: s.patch,
                which: "coarse loss",
            });
        }
        if !j1.is_finite() {
            return Err(CoreError::NonFiniteLoss {
                patch: s.patch,
                which: "fine loss",
            });
        }
    }

    // policy pass in training mode; the same forward feeds sampling and the
    // score-function gradient
    let patch_imgs: Vec<&Tensor<f32>> = samples.iter().map(|s| &s.image).collect();
    let patch_batch = batch_of_images(&patch_imgs);
    let policy_net = state.policy_net.as_ref().expect("policy net");
    let policy_store = state.policy.as_mut().expect("policy store");
    let (scores, policy_cache) = policy_net.forward_train(policy_store, &patch_batch)?;

    let mut reports = Vec::with_capacity(samples.len());
    let mut seeds = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let mut decision = decide(scores[i] as f64, state.zoom.alpha, &mut state.rng);
        if let Some(forced) = opts.force_action {
            decision.action = forced;
            decision.draw = 2.0;
        }
        let (j0, j1) = losses[i];
        let r = crate::policy::reward(decision.action, j0, j1, &state.zoom);
        seeds.push(
            (crate::policy::score_grad_seed(&decision, r, state.zoom.alpha)
                / samples.len() as f64) as f32,
        );
        reports.push(SampleReport {
            patch: s.patch,
            decision,
            j0,
            j1,
            reward: r,
        });
    }

    let policy_lr = state.policy_lr();
    let policy_store = state.policy.as_mut().expect("policy store");
    policy_net.backward(policy_store, &policy_cache, &seeds)?;
    policy_store
        .adam_step(policy_lr, state.adam)
        .map_err(CoreError::from)?;

    // route each sample's segmentation update by its action
    let break_idx: Vec<usize> = reports
        .iter()
        .enumerate()
        .filter(|(_, r)| r.decision.action == Action::Break)
        .map(|(i, _)| i)
        .collect();
    let zoom_idx: Vec<usize> = reports
        .iter()
        .enumerate()
        .filter(|(_, r)| r.decision.action == Action::Zoom)
        .map(|(i, _)| i)
        .collect();

    let touched_seg0 = !break_idx.is_empty();
    if touched_seg0 {
        let imgs: Vec<&Tensor<f32>> = break_idx.iter().map(|&i| &samples[i].image).collect();
        let labs: Vec<&IntMask> = break_idx.iter().map(|&i| &samples[i].labels).collect();
        let batch = batch_of_images(&imgs);
        let targets = one_hot(&labs, classes);
        let (logits, cache) = state.seg_net.forward_train(&mut state.seg0, &batch)?;
        let out = softmax_cross_entropy_map(&logits, &targets)?;
        let dlogits = softmax_cross_entropy_backward(1.0, &out, &targets);
        state.seg_net.backward(&mut state.seg0, &cache, &dlogits)?;
        state.seg0.adam_step(lr, state.adam)?;
    }

    let touched_seg1 = !zoom_idx.is_empty();
    if touched_seg1 {
        let mut imgs: Vec<&Tensor<f32>> = Vec::new();
        let mut labs: Vec<&IntMask> = Vec::new();
        for &i in &zoom_idx {
            imgs.extend(samples[i].child_images.iter());
            labs.extend(samples[i].child_labels.iter());
        }
        let batch = batch_of_images(&imgs);
        let targets = one_hot(&labs, classes);
        let seg1 = state.seg1.as_mut().expect("seg1");
        let (logits, cache) = state.seg_net.forward_train(seg1, &batch)?;
        let out = softmax_cross_entropy_map(&logits, &targets)?;
        let dlogits = softmax_cross_entropy_backward(1.0, &out, &targets);
        state.seg_net.backward(seg1, &cache, &dlogits)?;
        seg1.adam_step(lr, state.adam)?;
    }

    state.step += 1;

    let n = reports.len() as f64;
    Ok(StepReport {
        step: state.step,
        lr: lr as f64,
        j0_mean: reports.iter().map(|r| r.j0).sum::<f64>() / n,
        j1_mean: reports.iter().map(|r| r.j1).sum::<f64>() / n,
        zoom_fraction: zoom_idx.len() as f64 / n,
        reward_mean: reports.iter().map(|r| r.reward).sum::<f64>() / n,
        loss_mean: 0.0,
        touched_seg0,
        touched_seg1,
        touched_policy: true,
        samples: reports,
    })
}

/// One baseline training step: degrade every patch to the simulated
/// resolution (per-sample random for the multi-scale kind) and update the
/// single segmentation store.
pub fn train_step_baseline(
    state: &mut TrainState,
    samples: &[TrainSample],
    pinned_scale: Option<ModelKind>,
) -> Result<StepReport> {
    assert!(!samples.is_empty(), "empty batch");
    let classes = state.seg_net.cfg.classes;
    let lr = state.lr();

    let mut degraded = Vec::with_capacity(samples.len());
    for s in samples {
        let factor = match state.kind {
            ModelKind::Scale1 | ModelKind::Scale2 => {
                state.kind.degrade_factor().expect("baseline factor")
            }
            ModelKind::MultiScale => match pinned_scale {
                Some(kind) => kind.degrade_factor().expect("pinned scale factor"),
                None => {
                    use rand::Rng;
                    let pick: u64 = state.rng.random();
                    if pick % 2 == 0 {
                        4
                    } else {
                        2
                    }
                }
            },
            ModelKind::Razn => panic!("baseline step on a zoom model"),
        };
        let img4 = Tensor::stack(&[&s.image]);
        let deg = crate::common::degrade(&img4, factor)?;
        degraded.push(deg);
    }

    let imgs: Vec<&Tensor<f32>> = degraded.iter().collect();
    let mut batch_data = Vec::new();
    for img in &imgs {
        batch_data.extend_from_slice(img.data());
    }
    let (_, c, h, w) = degraded[0].dims4();
    let batch = Tensor::from_vec(&[samples.len(), c, h, w], batch_data);

    let labs: Vec<&IntMask> = samples.iter().map(|s| &s.labels).collect();
    let targets = one_hot(&labs, classes);
    let (logits, cache) = state.seg_net.forward_train(&mut state.seg0, &batch)?;
    let out = softmax_cross_entropy_map(&logits, &targets)?;
    if !out.loss.is_finite() {
        return Err(CoreError::NonFiniteLoss {
            patch: samples[0].patch,
            which: "baseline loss",
        });
    }
    let dlogits = softmax_cross_entropy_backward(1.0, &out, &targets);
    state.seg_net.backward(&mut state.seg0, &cache, &dlogits)?;
    state.seg0.adam_step(lr, state.adam)?;
    state.step += 1;

    Ok(StepReport {
        step: state.step,
        lr: lr as f64,
        loss_mean: out.loss as f64,
        touched_seg0: true,
        ..StepReport::default()
    })
}
