//! Pixel-wise softmax cross-entropy with one-hot label maps, averaged over
//! all batch and spatial positions.

use crate::element::Element;
use crate::error::{AutodiffError, Result};
use crate::tensor::Tensor;

fn check_one_hot<E: Element>(labels: &Tensor<E>) -> Result<()> {
    let (n, c, h, w) = labels.dims4();
    let plane = h * w;
    let y = labels.data();
    for ni in 0..n {
        for pos in 0..plane {
            let mut sum = E::ZERO;
            for ci in 0..c {
                let v = y[(ni * c + ci) * plane + pos];
                if v != E::ZERO && v != E::ONE {
                    return Err(AutodiffError::NotOneHot {
                        position: ni * plane + pos,
                    });
                }
                sum += v;
            }
            if sum != E::ONE {
                return Err(AutodiffError::NotOneHot {
                    position: ni * plane + pos,
                });
            }
        }
    }
    Ok(())
}

pub struct CrossEntropyOut<E: Element> {
    pub loss: E,
    /// Per-pixel softmax, kept for the backward pass.
    pub softmax: Tensor<E>,
}

pub fn softmax_cross_entropy_map<E: Element>(
    logits: &Tensor<E>,
    labels: &Tensor<E>,
) -> Result<CrossEntropyOut<E>> {
    if logits.shape() != labels.shape() {
        return Err(AutodiffError::ShapeMismatch {
            op: "softmax_cross_entropy_map",
            detail: format!(
                "logits {:?} vs labels {:?}",
                logits.shape(),
                labels.shape()
            ),
        });
    }
    check_one_hot(labels)?;
    let (n, c, h, w) = logits.dims4();
    let plane = h * w;
    let z = logits.data();
    let y = labels.data();
    let mut softmax = Tensor::zeros(logits.shape());

    let mut loss = E::ZERO;
    for ni in 0..n {
        for pos in 0..plane {
            let mut maxv = z[(ni * c) * plane + pos];
            for ci in 1..c {
                let v = z[(ni * c + ci) * plane + pos];
                if v > maxv {
                    maxv = v;
                }
            }
            let mut denom = E::ZERO;
            for ci in 0..c {
                denom += (z[(ni * c + ci) * plane + pos] - maxv).exp();
            }
            let log_denom = denom.ln();
            for ci in 0..c {
                let idx = (ni * c + ci) * plane + pos;
                let logp = z[idx] - maxv - log_denom;
                softmax.data_mut()[idx] = logp.exp();
                if y[idx] == E::ONE {
                    loss -= logp;
                }
            }
        }
    }
    let count = E::from_f64((n * plane) as f64);
    Ok(CrossEntropyOut {
        loss: loss / count,
        softmax,
    })
}

/// d loss / d logits = (softmax - labels) / (N*H*W), scaled by the upstream
/// seed (the gradient of whatever consumes the scalar loss).
pub fn softmax_cross_entropy_backward<E: Element>(
    seed: E,
    out: &CrossEntropyOut<E>,
    labels: &Tensor<E>,
) -> Tensor<E> {
    let (n, _, h, w) = labels.dims4();
    let scale = seed / E::from_f64((n * h * w) as f64);
    let mut grad = out.softmax.clone();
    for (g, &yv) in grad.data_mut().iter_mut().zip(labels.data().iter()) {
        *g = (*g - yv) * scale;
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_hot_map(n: usize, c: usize, h: usize, w: usize, class: usize) -> Tensor<f64> {
        let mut t = Tensor::zeros(&[n, c, h, w]);
        let plane = h * w;
        for ni in 0..n {
            for pos in 0..plane {
                t.data_mut()[(ni * c + class) * plane + pos] = 1.0;
            }
        }
        t
    }

    #[test]
    fn uniform_logits_give_ln_c() {
        let logits = Tensor::<f64>::filled(&[1, 4, 3, 3], 0.7);
        for class in 0..4 {
            let labels = one_hot_map(1, 4, 3, 3, class);
            let out = softmax_cross_entropy_map(&logits, &labels).unwrap();
            assert!((out.loss - 4.0f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn big_margin_drives_loss_to_zero() {
        let mut logits = Tensor::<f64>::zeros(&[1, 4, 2, 2]);
        let labels = one_hot_map(1, 4, 2, 2, 2);
        // +60 margin on the true class everywhere
        let plane = 4;
        for pos in 0..plane {
            logits.data_mut()[2 * plane + pos] = 60.0;
        }
        let out = softmax_cross_entropy_map(&logits, &labels).unwrap();
        assert!(out.loss < 1e-10);
    }

    #[test]
    fn rejects_non_one_hot() {
        let logits = Tensor::<f64>::zeros(&[1, 2, 1, 1]);
        let labels = Tensor::<f64>::from_vec(&[1, 2, 1, 1], vec![0.5, 0.5]);
        assert!(matches!(
            softmax_cross_entropy_map(&logits, &labels),
            Err(AutodiffError::NotOneHot { .. })
        ));
        let labels = Tensor::<f64>::from_vec(&[1, 2, 1, 1], vec![1.0, 1.0]);
        assert!(matches!(
            softmax_cross_entropy_map(&logits, &labels),
            Err(AutodiffError::NotOneHot { .. })
        ));
    }

    #[test]
    fn loss_is_never_negative() {
        // handful of deterministic pseudo-random cases
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..50 {
            let mut logits = Tensor::<f64>::zeros(&[1, 4, 2, 2]);
            for v in logits.data_mut() {
                *v = next() * 8.0 - 4.0;
            }
            let class = (next() * 4.0) as usize % 4;
            let labels = one_hot_map(1, 4, 2, 2, class);
            let out = softmax_cross_entropy_map(&logits, &labels).unwrap();
            assert!(out.loss >= 0.0);
        }
    }
}
