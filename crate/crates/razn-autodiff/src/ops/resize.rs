//! Bilinear resize with half-pixel centers and edge clamping. The convention
//! matters: source coord = (i + 0.5) * in/out - 0.5, clamped to the valid
//! range, so resizing to the same size is the identity.

use crate::element::Element;
use crate::error::{AutodiffError, Result};
use crate::tensor::Tensor;

struct AxisTap {
    lo: usize,
    hi: usize,
    frac: f64,
}

fn axis_taps(input: usize, output: usize) -> Vec<AxisTap> {
    let scale = input as f64 / output as f64;
    (0..output)
        .map(|i| {
            let src = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (input - 1) as f64);
            let lo = src.floor() as usize;
            let hi = (lo + 1).min(input - 1);
            AxisTap {
                lo,
                hi,
                frac: src - lo as f64,
            }
        })
        .collect()
}

pub fn bilinear_resize<E: Element>(
    input: &Tensor<E>,
    out_h: usize,
    out_w: usize,
) -> Result<Tensor<E>> {
    if input.shape().len() != 4 {
        return Err(AutodiffError::ShapeMismatch {
            op: "bilinear_resize",
            detail: format!("input must be 4-d, got {:?}", input.shape()),
        });
    }
    if out_h == 0 || out_w == 0 {
        return Err(AutodiffError::ShapeMismatch {
            op: "bilinear_resize",
            detail: "output extents must be >= 1".into(),
        });
    }
    let (n, c, h, w) = input.dims4();
    if (h, w) == (out_h, out_w) {
        return Ok(input.clone());
    }
    let rows = axis_taps(h, out_h);
    let cols = axis_taps(w, out_w);
    let mut out = Tensor::zeros(&[n, c, out_h, out_w]);
    let x = input.data();
    for plane in 0..n * c {
        let ibase = plane * h * w;
        let obase = plane * out_h * out_w;
        for (r, rt) in rows.iter().enumerate() {
            let fy = E::from_f64(rt.frac);
            let one_fy = E::ONE - fy;
            let top = ibase + rt.lo * w;
            let bot = ibase + rt.hi * w;
            for (cix, ct) in cols.iter().enumerate() {
                let fx = E::from_f64(ct.frac);
                let one_fx = E::ONE - fx;
                let v = one_fy * (one_fx * x[top + ct.lo] + fx * x[top + ct.hi])
                    + fy * (one_fx * x[bot + ct.lo] + fx * x[bot + ct.hi]);
                out.data_mut()[obase + r * out_w + cix] = v;
            }
        }
    }
    Ok(out)
}

/// Transpose of the forward interpolation: scatters each output gradient to
/// its four source taps with the same weights.
pub fn bilinear_resize_backward<E: Element>(
    grad_out: &Tensor<E>,
    input_shape: &[usize],
) -> Tensor<E> {
    let (n, c, oh, ow) = grad_out.dims4();
    let (h, w) = (input_shape[2], input_shape[3]);
    assert_eq!(n, input_shape[0]);
    assert_eq!(c, input_shape[1]);
    if (h, w) == (oh, ow) {
        return grad_out.clone();
    }
    let rows = axis_taps(h, oh);
    let cols = axis_taps(w, ow);
    let mut grad_input = Tensor::zeros(input_shape);
    let go = grad_out.data();
    for plane in 0..n * c {
        let ibase = plane * h * w;
        let obase = plane * oh * ow;
        for (r, rt) in rows.iter().enumerate() {
            let fy = E::from_f64(rt.frac);
            let one_fy = E::ONE - fy;
            for (cix, ct) in cols.iter().enumerate() {
                let fx = E::from_f64(ct.frac);
                let one_fx = E::ONE - fx;
                let g = go[obase + r * ow + cix];
                grad_input.data_mut()[ibase + rt.lo * w + ct.lo] += one_fy * one_fx * g;
                grad_input.data_mut()[ibase + rt.lo * w + ct.hi] += one_fy * fx * g;
                grad_input.data_mut()[ibase + rt.hi * w + ct.lo] += fy * one_fx * g;
                grad_input.data_mut()[ibase + rt.hi * w + ct.hi] += fy * fx * g;
            }
        }
    }
    grad_input
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_size_is_identity_bitwise() {
        let x = Tensor::<f32>::from_vec(&[1, 1, 2, 3], vec![0.1, 0.7, -2.5, 3.14, 9.9, 0.0]);
        let y = bilinear_resize(&x, 2, 3).unwrap();
        assert_eq!(x.data(), y.data());
    }

    #[test]
    fn constant_stays_constant() {
        let x = Tensor::<f32>::filled(&[1, 2, 3, 3], 4.25);
        for (oh, ow) in [(1, 1), (2, 5), (7, 7), (9, 2)] {
            let y = bilinear_resize(&x, oh, ow).unwrap();
            assert!(y.data().iter().all(|&v| (v - 4.25).abs() < 1e-6));
        }
    }

    #[test]
    fn two_by_two_to_four_by_four_matches_hand_table() {
        // Hand evaluation of the half-pixel convention on [[0,1],[2,3]]:
        // source coords per output index: -0.25, 0.25, 0.75, 1.25 -> clamped,
        // giving per-axis blend weights 0, 0.25, 0.75, 1.
        let x = Tensor::<f64>::from_vec(&[1, 1, 2, 2], vec![0.0, 1.0, 2.0, 3.0]);
        let y = bilinear_resize(&x, 4, 4).unwrap();
        let expected = [
            0.0, 0.25, 0.75, 1.0, //
            0.5, 0.75, 1.25, 1.5, //
            1.5, 1.75, 2.25, 2.5, //
            2.0, 2.25, 2.75, 3.0,
        ];
        for (a, e) in y.data().iter().zip(expected.iter()) {
            assert!((a - e).abs() < 1e-12, "{a} vs {e}");
        }
    }
}
