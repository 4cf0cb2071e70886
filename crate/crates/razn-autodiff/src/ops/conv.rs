//! 2-d cross-correlation with stride, padding and dilation, plus gradients
//! w.r.t. input, kernel and bias.

use rayon::prelude::*;

use crate::element::Element;
use crate::error::{AutodiffError, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeom {
    pub stride: usize,
    pub pad: usize,
    pub dilation: usize,
}

impl ConvGeom {
    pub fn new(stride: usize, pad: usize, dilation: usize) -> Self {
        ConvGeom {
            stride,
            pad,
            dilation,
        }
    }

    pub fn unit() -> Self {
        ConvGeom::new(1, 0, 1)
    }

    /// Output extent along one axis: floor((H + 2p - d(k-1) - 1)/s) + 1.
    pub fn out_extent(&self, input: usize, kernel: usize) -> Result<usize> {
        let span = self.dilation * (kernel - 1) + 1;
        let padded = input + 2 * self.pad;
        if padded < span {
            return Err(AutodiffError::ShapeMismatch {
                op: "conv2d",
                detail: format!(
                    "kernel span {span} exceeds padded input {padded} (input {input}, pad {})",
                    self.pad
                ),
            });
        }
        Ok((padded - span) / self.stride + 1)
    }
}

fn check_conv_args<E: Element>(
    input: &Tensor<E>,
    kernel: &Tensor<E>,
    bias: Option<&Tensor<E>>,
    geom: &ConvGeom,
) -> Result<()> {
    if input.shape().len() != 4 || kernel.shape().len() != 4 {
        return Err(AutodiffError::ShapeMismatch {
            op: "conv2d",
            detail: format!(
                "input {:?} and kernel {:?} must both be 4-d",
                input.shape(),
                kernel.shape()
            ),
        });
    }
    let (_, c, h, w) = input.dims4();
    let (k, kc, kh, kw) = kernel.dims4();
    if kc != c {
        return Err(AutodiffError::ShapeMismatch {
            op: "conv2d",
            detail: format!("kernel expects {kc} input channels, input has {c}"),
        });
    }
    if kh % 2 == 0 || kw % 2 == 0 {
        return Err(AutodiffError::ShapeMismatch {
            op: "conv2d",
            detail: format!("kernel extents must be odd, got {kh}x{kw}"),
        });
    }
    if geom.dilation == 0 || geom.stride == 0 {
        return Err(AutodiffError::ShapeMismatch {
            op: "conv2d",
            detail: "stride and dilation must be >= 1".into(),
        });
    }
    if let Some(b) = bias {
        if b.shape() != [k] {
            return Err(AutodiffError::ShapeMismatch {
                op: "conv2d",
                detail: format!("bias shape {:?} does not match {k} output channels", b.shape()),
            });
        }
    }
    geom.out_extent(h, kh)?;
    geom.out_extent(w, kw)?;
    Ok(())
}

/// Valid output range [lo, hi) along one axis for a fixed kernel tap, so the
/// inner loops never branch on bounds.
#[inline]
fn out_range(input: usize, out: usize, stride: usize, pad: usize, tap: usize) -> (usize, usize) {
    // need 0 <= o*stride + tap - pad <= input-1
    let lo = if tap >= pad {
        0
    } else {
        (pad - tap).div_ceil(stride)
    };
    let max_pos = input - 1 + pad;
    if max_pos < tap {
        return (0, 0);
    }
    let hi = ((max_pos - tap) / stride + 1).min(out);
    (lo.min(hi), hi)
}

pub fn conv2d<E: Element>(
    input: &Tensor<E>,
    kernel: &Tensor<E>,
    bias: Option<&Tensor<E>>,
    geom: ConvGeom,
) -> Result<Tensor<E>> {
    check_conv_args(input, kernel, bias, &geom)?;
    let (n, c, h, w) = input.dims4();
    let (k, _, kh, kw) = kernel.dims4();
    let oh = geom.out_extent(h, kh)?;
    let ow = geom.out_extent(w, kw)?;

    let mut out = Tensor::zeros(&[n, k, oh, ow]);
    let x = input.data();
    let ker = kernel.data();

    out.data_mut()
        .par_chunks_mut(oh * ow)
        .enumerate()
        .for_each(|(nk, acc)| {
            let ni = nk / k;
            let ki = nk % k;
            if let Some(b) = bias {
                let bv = b.data()[ki];
                for v in acc.iter_mut() {
                    *v = bv;
                }
            }
            for ci in 0..c {
                let xbase = (ni * c + ci) * h * w;
                let kbase = (ki * c + ci) * kh * kw;
                for th in 0..kh {
                    let tap_h = th * geom.dilation;
                    let (oh_lo, oh_hi) = out_range(h, oh, geom.stride, geom.pad, tap_h);
                    for tw in 0..kw {
                        let tap_w = tw * geom.dilation;
                        let weight = ker[kbase + th * kw + tw];
                        let (ow_lo, ow_hi) = out_range(w, ow, geom.stride, geom.pad, tap_w);
                        if ow_lo >= ow_hi {
                            continue;
                        }
                        let run = ow_hi - ow_lo;
                        for o_r in oh_lo..oh_hi {
                            let ih = o_r * geom.stride + tap_h - geom.pad;
                            let iw0 = ow_lo * geom.stride + tap_w - geom.pad;
                            let row = &x[xbase + ih * w + iw0..];
                            let dst = &mut acc[o_r * ow + ow_lo..o_r * ow + ow_hi];
                            if geom.stride == 1 {
                                for (d, &s) in dst.iter_mut().zip(&row[..run]) {
                                    *d += weight * s;
                                }
                            } else {
                                for (d, s) in
                                    dst.iter_mut().zip(row.iter().step_by(geom.stride))
                                {
                                    *d += weight * *s;
                                }
                            }
                        }
                    }
                }
            }
        });

    Ok(out)
}

pub struct ConvGrads<E: Element> {
    pub input: Tensor<E>,
    pub kernel: Tensor<E>,
    pub bias: Option<Tensor<E>>,
}

pub fn conv2d_backward<E: Element>(
    grad_out: &Tensor<E>,
    input: &Tensor<E>,
    kernel: &Tensor<E>,
    has_bias: bool,
    geom: ConvGeom,
) -> Result<ConvGrads<E>> {
    let (n, c, h, w) = input.dims4();
    let (k, _, kh, kw) = kernel.dims4();
    let oh = geom.out_extent(h, kh)?;
    let ow = geom.out_extent(w, kw)?;
    if grad_out.shape() != [n, k, oh, ow] {
        return Err(AutodiffError::ShapeMismatch {
            op: "conv2d_backward",
            detail: format!(
                "grad_out {:?} does not match expected [{n},{k},{oh},{ow}]",
                grad_out.shape()
            ),
        });
    }
    let go = grad_out.data();
    let x = input.data();
    let ker = kernel.data();

    // d input: parallel over samples, each sample's slice disjoint.
    let mut grad_input = Tensor::zeros(&[n, c, h, w]);
    grad_input
        .data_mut()
        .par_chunks_mut(c * h * w)
        .enumerate()
        .for_each(|(ni, gin)| {
            for ki in 0..k {
                let gbase = (ni * k + ki) * oh * ow;
                for ci in 0..c {
                    let kbase = (ki * c + ci) * kh * kw;
                    for th in 0..kh {
                        let tap_h = th * geom.dilation;
                        let (oh_lo, oh_hi) = out_range(h, oh, geom.stride, geom.pad, tap_h);
                        for tw in 0..kw {
                            let tap_w = tw * geom.dilation;
                            let weight = ker[kbase + th * kw + tw];
                            let (ow_lo, ow_hi) = out_range(w, ow, geom.stride, geom.pad, tap_w);
                            if ow_lo >= ow_hi {
                                continue;
                            }
                            let run = ow_hi - ow_lo;
                            for o_r in oh_lo..oh_hi {
                                let ih = o_r * geom.stride + tap_h - geom.pad;
                                let iw0 = ow_lo * geom.stride + tap_w - geom.pad;
                                let src = &go[gbase + o_r * ow + ow_lo..gbase + o_r * ow + ow_hi];
                                let dst = &mut gin[ci * h * w + ih * w + iw0..];
                                if geom.stride == 1 {
                                    for (d, &s) in dst[..run].iter_mut().zip(src) {
                                        *d += weight * s;
                                    }
                                } else {
                                    for (d, &s) in
                                        dst.iter_mut().step_by(geom.stride).zip(src)
                                    {
                                        *d += weight * s;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        });

    // d kernel: parallel over output channels, serial over samples so the
    // accumulation order is fixed.
    let mut grad_kernel = Tensor::zeros(&[k, c, kh, kw]);
    grad_kernel
        .data_mut()
        .par_chunks_mut(c * kh * kw)
        .enumerate()
        .for_each(|(ki, gker)| {
            for ni in 0..n {
                let gbase = (ni * k + ki) * oh * ow;
                for ci in 0..c {
                    let xbase = (ni * c + ci) * h * w;
                    for th in 0..kh {
                        let tap_h = th * geom.dilation;
                        let (oh_lo, oh_hi) = out_range(h, oh, geom.stride, geom.pad, tap_h);
                        for tw in 0..kw {
                            let tap_w = tw * geom.dilation;
                            let (ow_lo, ow_hi) = out_range(w, ow, geom.stride, geom.pad, tap_w);
                            if ow_lo >= ow_hi {
                                continue;
                            }
                            let run = ow_hi - ow_lo;
                            let mut acc = E::ZERO;
                            for o_r in oh_lo..oh_hi {
                                let ih = o_r * geom.stride + tap_h - geom.pad;
                                let iw0 = ow_lo * geom.stride + tap_w - geom.pad;
                                let src = &go[gbase + o_r * ow + ow_lo..gbase + o_r * ow + ow_hi];
                                let xrow = &x[xbase + ih * w + iw0..];
                                if geom.stride == 1 {
                                    for (&s, &xv) in src.iter().zip(&xrow[..run]) {
                                        acc += xv * s;
                                    }
                                } else {
                                    for (&s, xv) in
                                        src.iter().zip(xrow.iter().step_by(geom.stride))
                                    {
                                        acc += *xv * s;
                                    }
                                }
                            }
                            gker[ci * kh * kw + th * kw + tw] += acc;
                        }
                    }
                }
            }
        });

    let grad_bias = if has_bias {
        let mut gb = Tensor::zeros(&[k]);
        for ni in 0..n {
            for ki in 0..k {
                let gbase = (ni * k + ki) * oh * ow;
                let mut acc = E::ZERO;
                for i in 0..oh * ow {
                    acc += go[gbase + i];
                }
                gb.data_mut()[ki] += acc;
            }
        }
        Some(gb)
    } else {
        None
    };

    Ok(ConvGrads {
        input: grad_input,
        kernel: grad_kernel,
        bias: grad_bias,
    })
}
