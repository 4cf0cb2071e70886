//! Analytic multiply-accumulate counter. Exact function of configuration and
//! input size, invariant to parameter values: convs count K*C*kh*kw*H'*W',
//! linear layers K*C, batch norm one scale-and-shift per element, bilinear
//! resize four taps per output element. Pooling and ReLU count zero.

use crate::config::{PolicyNetConfig, SegNetConfig};

#[inline]
pub fn conv_macs(out_ch: usize, in_ch: usize, kh: usize, kw: usize, oh: usize, ow: usize) -> u64 {
    (out_ch * in_ch * kh * kw) as u64 * (oh * ow) as u64
}

#[inline]
fn out_extent(input: usize, k: usize, stride: usize, pad: usize, dilation: usize) -> usize {
    (input + 2 * pad - dilation * (k - 1) - 1) / stride + 1
}

fn bn_macs(ch: usize, h: usize, w: usize) -> u64 {
    (ch * h * w) as u64
}

fn resize_macs(ch: usize, oh: usize, ow: usize) -> u64 {
    4 * (ch * oh * ow) as u64
}

/// One forward pass of the segmentation network at the given input size.
pub fn seg_macs(cfg: &SegNetConfig, h: usize, w: usize) -> u64 {
    let mut total = 0u64;
    // stem conv 7x7/2 + BN
    let (mut ch, mut cw) = (out_extent(h, 7, 2, 3, 1), out_extent(w, 7, 2, 3, 1));
    total += conv_macs(cfg.widths[0], 3, 7, 7, ch, cw);
    total += bn_macs(cfg.widths[0], ch, cw);
    // stem max pool 3x3/2
    ch = out_extent(ch, 3, 2, 1, 1);
    cw = out_extent(cw, 3, 2, 1, 1);

    let geom = cfg.stage_geometry();
    let mut in_ch = cfg.widths[0];
    for (si, (&width, &count)) in cfg.widths.iter().zip(cfg.blocks.iter()).enumerate() {
        let (stage_stride, dilation) = geom[si];
        for bi in 0..count {
            let stride = if bi == 0 { stage_stride } else { 1 };
            let pad = dilation;
            let (oh, ow) = (
                out_extent(ch, 3, stride, pad, dilation),
                out_extent(cw, 3, stride, pad, dilation),
            );
            total += conv_macs(width, in_ch, 3, 3, oh, ow);
            total += bn_macs(width, oh, ow);
            total += conv_macs(width, width, 3, 3, oh, ow);
            total += bn_macs(width, oh, ow);
            if in_ch != width || stride != 1 {
                total += conv_macs(width, in_ch, 1, 1, oh, ow);
                total += bn_macs(width, oh, ow);
            }
            (ch, cw) = (oh, ow);
            in_ch = width;
        }
    }

    // 1x1 classifier head and bilinear upsample back to the input extent
    total += conv_macs(cfg.classes, cfg.widths[3], 1, 1, ch, cw);
    total += resize_macs(cfg.classes, h, w);
    total
}

/// One forward pass of the policy network at the given input size.
pub fn policy_macs(cfg: &PolicyNetConfig, h: usize, w: usize) -> u64 {
    let mut total = 0u64;
    let (mut ch, mut cw) = (out_extent(h, 7, 2, 3, 1), out_extent(w, 7, 2, 3, 1));
    total += conv_macs(cfg.widths[0], 3, 7, 7, ch, cw);
    total += bn_macs(cfg.widths[0], ch, cw);
    ch = out_extent(ch, 3, 2, 1, 1);
    cw = out_extent(cw, 3, 2, 1, 1);

    let mut in_ch = cfg.widths[0];
    for (&width, &stride) in cfg.widths.iter().zip(cfg.strides.iter()) {
        let (oh, ow) = (
            out_extent(ch, 3, stride, 1, 1),
            out_extent(cw, 3, stride, 1, 1),
        );
        total += conv_macs(width, in_ch, 3, 3, oh, ow);
        total += bn_macs(width, oh, ow);
        (ch, cw) = (oh, ow);
        in_ch = width;
    }

    // global average pool counts zero; linear head 1 x widths[3]
    total += cfg.widths[3] as u64;
    total
}

/// Per-network cost at a common input size and the derived policy/seg ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostModel {
    pub seg_macs: u64,
    pub policy_macs: u64,
}

impl CostModel {
    pub fn new(seg: &SegNetConfig, policy: &PolicyNetConfig, h: usize, w: usize) -> Self {
        CostModel {
            seg_macs: seg_macs(seg, h, w),
            policy_macs: policy_macs(policy, h, w),
        }
    }

    /// Cost of one policy pass in units of one segmentation pass.
    pub fn ratio(&self) -> f64 {
        self.policy_macs as f64 / self.seg_macs as f64
    }
}
