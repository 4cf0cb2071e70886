//! Per-channel batch normalization over [N,C,H,W].

use crate::element::Element;
use crate::error::{AutodiffError, Result};
use crate::tensor::Tensor;

pub struct BnCache<E: Element> {
    /// Normalized input, needed by the backward pass.
    pub xhat: Tensor<E>,
    pub inv_std: Vec<E>,
}

fn check_bn_shapes<E: Element>(
    input: &Tensor<E>,
    gamma: &Tensor<E>,
    beta: &Tensor<E>,
) -> Result<(usize, usize, usize, usize)> {
    if input.shape().len() != 4 {
        return Err(AutodiffError::ShapeMismatch {
            op: "batchnorm2d",
            detail: format!("input must be 4-d, got {:?}", input.shape()),
        });
    }
    let (n, c, h, w) = input.dims4();
    if gamma.shape() != [c] || beta.shape() != [c] {
        return Err(AutodiffError::ShapeMismatch {
            op: "batchnorm2d",
            detail: format!(
                "gamma {:?} / beta {:?} must both have shape [{c}]",
                gamma.shape(),
                beta.shape()
            ),
        });
    }
    Ok((n, c, h, w))
}

/// Training-mode forward: normalizes by batch statistics and folds them into
/// the running estimates with the given momentum.
pub fn batchnorm2d_train<E: Element>(
    input: &Tensor<E>,
    gamma: &Tensor<E>,
    beta: &Tensor<E>,
    running_mean: &mut Tensor<E>,
    running_var: &mut Tensor<E>,
    momentum: E,
    eps: E,
) -> Result<(Tensor<E>, BnCache<E>)> {
    let (n, c, h, w) = check_bn_shapes(input, gamma, beta)?;
    let count = n * h * w;
    if count <= 1 {
        return Err(AutodiffError::DegenerateBatch);
    }
    let count_e = E::from_f64(count as f64);

    let mut out = Tensor::zeros(input.shape());
    let mut xhat = Tensor::zeros(input.shape());
    let mut inv_std = vec![E::ZERO; c];
    let x = input.data();
    let plane = h * w;

    for ci in 0..c {
        let mut mean = E::ZERO;
        for ni in 0..n {
            let base = (ni * c + ci) * plane;
            for i in 0..plane {
                mean += x[base + i];
            }
        }
        mean = mean / count_e;

        let mut var = E::ZERO;
        for ni in 0..n {
            let base = (ni * c + ci) * plane;
            for i in 0..plane {
                let d = x[base + i] - mean;
                var += d * d;
            }
        }
        var = var / count_e;

        let istd = E::ONE / (var + eps).sqrt();
        inv_std[ci] = istd;
        let g = gamma.data()[ci];
        let b = beta.data()[ci];
        for ni in 0..n {
            let base = (ni * c + ci) * plane;
            for i in 0..plane {
                let xh = (x[base + i] - mean) * istd;
                xhat.data_mut()[base + i] = xh;
                out.data_mut()[base + i] = g * xh + b;
            }
        }

        running_mean.data_mut()[ci] = momentum * running_mean.data()[ci] + (E::ONE - momentum) * mean;
        running_var.data_mut()[ci] = momentum * running_var.data()[ci] + (E::ONE - momentum) * var;
    }

    Ok((out, BnCache { xhat, inv_std }))
}

/// Batch-statistics forward without any state change: normalizes by the
/// batch moments like training mode but leaves the running estimates
/// untouched. Used for loss probes that must not mutate the store.
pub fn batchnorm2d_stats<E: Element>(
    input: &Tensor<E>,
    gamma: &Tensor<E>,
    beta: &Tensor<E>,
    eps: E,
) -> Result<Tensor<E>> {
    let (n, c, h, w) = check_bn_shapes(input, gamma, beta)?;
    let count = n * h * w;
    if count <= 1 {
        return Err(AutodiffError::DegenerateBatch);
    }
    let count_e = E::from_f64(count as f64);
    let mut out = Tensor::zeros(input.shape());
    let x = input.data();
    let plane = h * w;
    for ci in 0..c {
        let mut mean = E::ZERO;
        for ni in 0..n {
            let base = (ni * c + ci) * plane;
            for i in 0..plane {
                mean += x[base + i];
            }
        }
        mean = mean / count_e;
        let mut var = E::ZERO;
        for ni in 0..n {
            let base = (ni * c + ci) * plane;
            for i in 0..plane {
                let d = x[base + i] - mean;
                var += d * d;
            }
        }
        var = var / count_e;
        let istd = E::ONE / (var + eps).sqrt();
        let g = gamma.data()[ci];
        let b = beta.data()[ci];
        for ni in 0..n {
            let base = (ni * c + ci) * plane;
            for i in 0..plane {
                out.data_mut()[base + i] = g * (x[base + i] - mean) * istd + b;
            }
        }
    }
    Ok(out)
}

/// Eval-mode forward: normalizes by the running estimates, no state change.
pub fn batchnorm2d_eval<E: Element>(
    input: &Tensor<E>,
    gamma: &Tensor<E>,
    beta: &Tensor<E>,
    running_mean: &Tensor<E>,
    running_var: &Tensor<E>,
    eps: E,
) -> Result<Tensor<E>> {
    let (n, c, h, w) = check_bn_shapes(input, gamma, beta)?;
    let mut out = Tensor::zeros(input.shape());
    let x = input.data();
    let plane = h * w;
    for ci in 0..c {
        let mean = running_mean.data()[ci];
        let istd = E::ONE / (running_var.data()[ci] + eps).sqrt();
        let g = gamma.data()[ci];
        let b = beta.data()[ci];
        for ni in 0..n {
            let base = (ni * c + ci) * plane;
            for i in 0..plane {
                out.data_mut()[base + i] = g * (x[base + i] - mean) * istd + b;
            }
        }
    }
    Ok(out)
}

pub struct BnGrads<E: Element> {
    pub input: Tensor<E>,
    pub gamma: Tensor<E>,
    pub beta: Tensor<E>,
}

pub fn batchnorm2d_backward<E: Element>(
    grad_out: &Tensor<E>,
    cache: &BnCache<E>,
    gamma: &Tensor<E>,
) -> Result<BnGrads<E>> {
    let (n, c, h, w) = cache.xhat.dims4();
    if grad_out.shape() != cache.xhat.shape() {
        return Err(AutodiffError::ShapeMismatch {
            op: "batchnorm2d_backward",
            detail: format!(
                "grad_out {:?} does not match activation {:?}",
                grad_out.shape(),
                cache.xhat.shape()
            ),
        });
    }
    let plane = h * w;
    let count = n * plane;
    let count_e = E::from_f64(count as f64);

    let mut grad_input = Tensor::zeros(cache.xhat.shape());
    let mut grad_gamma = Tensor::zeros(&[c]);
    let mut grad_beta = Tensor::zeros(&[c]);
    let go = grad_out.data();
    let xh = cache.xhat.data();

    for ci in 0..c {
        let mut sum_go = E::ZERO;
        let mut sum_go_xh = E::ZERO;
        for ni in 0..n {
            let base = (ni * c + ci) * plane;
            for i in 0..plane {
                sum_go += go[base + i];
                sum_go_xh += go[base + i] * xh[base + i];
            }
        }
        grad_gamma.data_mut()[ci] = sum_go_xh;
        grad_beta.data_mut()[ci] = sum_go;

        let g = gamma.data()[ci];
        let istd = cache.inv_std[ci];
        let mean_go = sum_go / count_e;
        let mean_go_xh = sum_go_xh / count_e;
        for ni in 0..n {
            let base = (ni * c + ci) * plane;
            for i in 0..plane {
                let idx = base + i;
                grad_input.data_mut()[idx] =
                    g * istd * (go[idx] - mean_go - xh[idx] * mean_go_xh);
            }
        }
    }

    Ok(BnGrads {
        input: grad_input,
        gamma: grad_gamma,
        beta: grad_beta,
    })
}
