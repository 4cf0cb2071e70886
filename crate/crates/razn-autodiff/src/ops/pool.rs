//! Max pooling (the backbone stem) and global average pooling (policy head).

use crate::element::Element;
use crate::error::{AutodiffError, Result};
use crate::tensor::Tensor;

pub struct MaxPoolOut<E: Element> {
    pub output: Tensor<E>,
    /// Flat (h*w) index of the winning input element per output element,
    /// within its own (n, c) plane.
    pub argmax: Vec<u32>,
}

pub fn maxpool2d<E: Element>(
    input: &Tensor<E>,
    kernel: usize,
    stride: usize,
    pad: usize,
) -> Result<MaxPoolOut<E>> {
    if input.shape().len() != 4 {
        return Err(AutodiffError::ShapeMismatch {
            op: "maxpool2d",
            detail: format!("input must be 4-d, got {:?}", input.shape()),
        });
    }
    let (n, c, h, w) = input.dims4();
    if h + 2 * pad < kernel || w + 2 * pad < kernel {
        return Err(AutodiffError::ShapeMismatch {
            op: "maxpool2d",
            detail: format!("window {kernel} too large for padded {h}x{w}"),
        });
    }
    let oh = (h + 2 * pad - kernel) / stride + 1;
    let ow = (w + 2 * pad - kernel) / stride + 1;

    let mut out = Tensor::zeros(&[n, c, oh, ow]);
    let mut argmax = vec![0u32; n * c * oh * ow];
    let x = input.data();

    for ni in 0..n {
        for ci in 0..c {
            let base = (ni * c + ci) * h * w;
            let obase = (ni * c + ci) * oh * ow;
            for o_r in 0..oh {
                for o_c in 0..ow {
                    let mut best = E::from_f64(f64::NEG_INFINITY);
                    let mut best_idx = 0usize;
                    for kr in 0..kernel {
                        let ih = o_r * stride + kr;
                        if ih < pad || ih - pad >= h {
                            continue;
                        }
                        let ih = ih - pad;
                        for kc in 0..kernel {
                            let iw = o_c * stride + kc;
                            if iw < pad || iw - pad >= w {
                                continue;
                            }
                            let iw = iw - pad;
                            let v = x[base + ih * w + iw];
                            if v > best {
                                best = v;
                                best_idx = ih * w + iw;
                            }
                        }
                    }
                    out.data_mut()[obase + o_r * ow + o_c] = best;
                    argmax[obase + o_r * ow + o_c] = best_idx as u32;
                }
            }
        }
    }

    Ok(MaxPoolOut {
        output: out,
        argmax,
    })
}

pub fn maxpool2d_backward<E: Element>(
    grad_out: &Tensor<E>,
    argmax: &[u32],
    input_shape: &[usize],
) -> Tensor<E> {
    let (n, c, h, w) = (
        input_shape[0],
        input_shape[1],
        input_shape[2],
        input_shape[3],
    );
    let (gn, gc, goh, gow) = grad_out.dims4();
    assert_eq!((gn, gc), (n, c), "maxpool backward plane mismatch");
    let mut grad_input = Tensor::zeros(input_shape);
    let go = grad_out.data();
    for plane in 0..n * c {
        let obase = plane * goh * gow;
        let ibase = plane * h * w;
        for i in 0..goh * gow {
            let idx = argmax[obase + i] as usize;
            grad_input.data_mut()[ibase + idx] += go[obase + i];
        }
    }
    grad_input
}

/// [N,C,H,W] -> [N,C] mean over the spatial plane.
pub fn global_avg_pool<E: Element>(input: &Tensor<E>) -> Result<Tensor<E>> {
    if input.shape().len() != 4 {
        return Err(AutodiffError::ShapeMismatch {
            op: "global_avg_pool",
            detail: format!("input must be 4-d, got {:?}", input.shape()),
        });
    }
    let (n, c, h, w) = input.dims4();
    let plane = h * w;
    let denom = E::from_f64(plane as f64);
    let mut out = Tensor::zeros(&[n, c]);
    let x = input.data();
    for i in 0..n * c {
        let mut acc = E::ZERO;
        for j in 0..plane {
            acc += x[i * plane + j];
        }
        out.data_mut()[i] = acc / denom;
    }
    Ok(out)
}

pub fn global_avg_pool_backward<E: Element>(
    grad_out: &Tensor<E>,
    input_shape: &[usize],
) -> Tensor<E> {
    let (h, w) = (input_shape[2], input_shape[3]);
    let plane = h * w;
    let denom = E::from_f64(plane as f64);
    let mut grad_input = Tensor::zeros(input_shape);
    let go = grad_out.data();
    for i in 0..go.len() {
        let g = go[i] / denom;
        for j in 0..plane {
            grad_input.data_mut()[i * plane + j] = g;
        }
    }
    grad_input
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_is_arithmetic_mean() {
        let x = Tensor::<f32>::from_vec(&[1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]);
        let y = global_avg_pool(&x).unwrap();
        assert_eq!(y.shape(), &[1, 1]);
        assert!((y.data()[0] - 2.5).abs() < 1e-7);
    }

    #[test]
    fn maxpool_picks_window_max() {
        let x = Tensor::<f32>::from_vec(
            &[1, 1, 4, 4],
            vec![
                1.0, 2.0, 3.0, 4.0, //
                5.0, 6.0, 7.0, 8.0, //
                9.0, 10.0, 11.0, 12.0, //
                13.0, 14.0, 15.0, 16.0,
            ],
        );
        let p = maxpool2d(&x, 2, 2, 0).unwrap();
        assert_eq!(p.output.shape(), &[1, 1, 2, 2]);
        assert_eq!(p.output.data(), &[6.0, 8.0, 14.0, 16.0]);
    }

    #[test]
    fn maxpool_backward_routes_to_argmax() {
        let x = Tensor::<f32>::from_vec(&[1, 1, 2, 2], vec![1.0, 9.0, 3.0, 4.0]);
        let p = maxpool2d(&x, 2, 1, 0).unwrap();
        let go = Tensor::<f32>::from_vec(&[1, 1, 1, 1], vec![2.0]);
        let gi = maxpool2d_backward(&go, &p.argmax, &[1, 1, 2, 2]);
        assert_eq!(gi.data(), &[0.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn stem_pool_shape() {
        // ResNet-style 3x3 stride-2 pad-1 pool halves the extent
        let x = Tensor::<f32>::zeros(&[1, 2, 32, 32]);
        let p = maxpool2d(&x, 3, 2, 1).unwrap();
        assert_eq!(p.output.shape(), &[1, 2, 16, 16]);
    }
}
