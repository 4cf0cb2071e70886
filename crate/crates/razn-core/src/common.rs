//! Shared glue: one-hot encoding, the per-patch segmentation loss, argmax
//! masks and the simulated-resolution degradation.

use razn_autodiff::{bilinear_resize, softmax_cross_entropy_map, Tensor};
use razn_pyramid::IntMask;

use crate::error::Result;

/// Index masks to a one-hot [N,C,H,W] map.
pub fn one_hot(masks: &[&IntMask], classes: usize) -> Tensor<f32> {
    assert!(!masks.is_empty());
    let (h, w) = (masks[0].h, masks[0].w);
    let plane = h * w;
    let mut t = Tensor::zeros(&[masks.len(), classes, h, w]);
    for (ni, mask) in masks.iter().enumerate() {
        assert_eq!((mask.h, mask.w), (h, w), "mask extents differ in batch");
        for (pos, &v) in mask.data.iter().enumerate() {
            t.data_mut()[(ni * classes + v as usize) * plane + pos] = 1.0;
        }
    }
    t
}

/// Mean pixel-wise cross entropy of logits against index labels — the
/// training objective of every segmentation net here.
pub fn seg_loss(logits: &Tensor<f32>, labels: &[&IntMask], classes: usize) -> Result<f64> {
    let targets = one_hot(labels, classes);
    let out = softmax_cross_entropy_map(logits, &targets)?;
    Ok(out.loss as f64)
}

/// Per-pixel argmax over the class axis of [1,C,H,W] logits.
pub fn argmax_mask(logits: &Tensor<f32>) -> IntMask {
    let (n, c, h, w) = logits.dims4();
    assert_eq!(n, 1, "argmax_mask expects a single sample");
    let plane = h * w;
    let mut mask = IntMask::filled(h, w, 0);
    for pos in 0..plane {
        let mut best = 0usize;
        let mut best_v = logits.data()[pos];
        for ci in 1..c {
            let v = logits.data()[ci * plane + pos];
            if v > best_v {
                best_v = v;
                best = ci;
            }
        }
        mask.data[pos] = best as u8;
    }
    mask
}

/// Simulates viewing at 1/factor of the native resolution: bilinear
/// downsample then bilinear resize back to the original extent.
pub fn degrade(image: &Tensor<f32>, factor: usize) -> Result<Tensor<f32>> {
    assert!(factor >= 1);
    if factor == 1 {
        return Ok(image.clone());
    }
    let (_, _, h, w) = image.dims4();
    let down = bilinear_resize(image, (h / factor).max(1), (w / factor).max(1))?;
    Ok(bilinear_resize(&down, h, w)?)
}
