use crate::element::Element;
use crate::error::{AutodiffError, Result};
use crate::tensor::Tensor;

/// y[n,k] = sum_c x[n,c] * w[k,c] + b[k]
pub fn linear<E: Element>(
    input: &Tensor<E>,
    weight: &Tensor<E>,
    bias: Option<&Tensor<E>>,
) -> Result<Tensor<E>> {
    let (n, c) = input.dims2();
    let (k, wc) = weight.dims2();
    if wc != c {
        return Err(AutodiffError::ShapeMismatch {
            op: "linear",
            detail: format!("weight expects {wc} features, input has {c}"),
        });
    }
    if let Some(b) = bias {
        if b.shape() != [k] {
            return Err(AutodiffError::ShapeMismatch {
                op: "linear",
                detail: format!("bias shape {:?} does not match {k} outputs", b.shape()),
            });
        }
    }
    let mut out = Tensor::zeros(&[n, k]);
    let x = input.data();
    let w = weight.data();
    for ni in 0..n {
        for ki in 0..k {
            let mut acc = match bias {
                Some(b) => b.data()[ki],
                None => E::ZERO,
            };
            for ci in 0..c {
                acc += x[ni * c + ci] * w[ki * c + ci];
            }
            out.data_mut()[ni * k + ki] = acc;
        }
    }
    Ok(out)
}

pub struct LinearGrads<E: Element> {
    pub input: Tensor<E>,
    pub weight: Tensor<E>,
    pub bias: Option<Tensor<E>>,
}

pub fn linear_backward<E: Element>(
    grad_out: &Tensor<E>,
    input: &Tensor<E>,
    weight: &Tensor<E>,
    has_bias: bool,
) -> Result<LinearGrads<E>> {
    let (n, c) = input.dims2();
    let (k, _) = weight.dims2();
    if grad_out.shape() != [n, k] {
        return Err(AutodiffError::ShapeMismatch {
            op: "linear_backward",
            detail: format!("grad_out {:?} does not match [{n},{k}]", grad_out.shape()),
        });
    }
    let go = grad_out.data();
    let x = input.data();
    let w = weight.data();

    let mut grad_input = Tensor::zeros(&[n, c]);
    for ni in 0..n {
        for ci in 0..c {
            let mut acc = E::ZERO;
            for ki in 0..k {
                acc += go[ni * k + ki] * w[ki * c + ci];
            }
            grad_input.data_mut()[ni * c + ci] = acc;
        }
    }

    let mut grad_weight = Tensor::zeros(&[k, c]);
    for ki in 0..k {
        for ci in 0..c {
            let mut acc = E::ZERO;
            for ni in 0..n {
                acc += go[ni * k + ki] * x[ni * c + ci];
            }
            grad_weight.data_mut()[ki * c + ci] = acc;
        }
    }

    let grad_bias = if has_bias {
        let mut gb = Tensor::zeros(&[k]);
        for ni in 0..n {
            for ki in 0..k {
                gb.data_mut()[ki] += go[ni * k + ki];
            }
        }
        Some(gb)
    } else {
        None
    };

    Ok(LinearGrads {
        input: grad_input,
        weight: grad_weight,
        bias: grad_bias,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_manual_product() {
        let x = Tensor::<f32>::from_vec(&[1, 3], vec![1.0, 2.0, 3.0]);
        let w = Tensor::<f32>::from_vec(&[2, 3], vec![1.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
        let b = Tensor::<f32>::from_vec(&[2], vec![0.5, -0.5]);
        let y = linear(&x, &w, Some(&b)).unwrap();
        assert_eq!(y.data(), &[1.5, 4.5]);
    }
}
