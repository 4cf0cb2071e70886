use crate::element::Element;
use crate::tensor::Tensor;

pub fn relu<E: Element>(input: &Tensor<E>) -> Tensor<E> {
    input.map(|v| if v > E::ZERO { v } else { E::ZERO })
}

/// Gradient is gated on the forward *input* sign (zero at x <= 0).
pub fn relu_backward<E: Element>(grad_out: &Tensor<E>, input: &Tensor<E>) -> Tensor<E> {
    assert_eq!(grad_out.shape(), input.shape(), "relu backward shape mismatch");
    let mut g = grad_out.clone();
    for (gv, &xv) in g.data_mut().iter_mut().zip(input.data().iter()) {
        if xv <= E::ZERO {
            *gv = E::ZERO;
        }
    }
    g
}

pub fn sigmoid<E: Element>(input: &Tensor<E>) -> Tensor<E> {
    input.map(sigmoid_scalar)
}

#[inline]
pub fn sigmoid_scalar<E: Element>(v: E) -> E {
    // split on sign for numeric stability at large |v|
    if v >= E::ZERO {
        E::ONE / (E::ONE + (-v).exp())
    } else {
        let e = v.exp();
        e / (E::ONE + e)
    }
}

/// d sigmoid = y (1 - y), expressed in terms of the forward output.
pub fn sigmoid_backward<E: Element>(grad_out: &Tensor<E>, output: &Tensor<E>) -> Tensor<E> {
    assert_eq!(grad_out.shape(), output.shape(), "sigmoid backward shape mismatch");
    let mut g = grad_out.clone();
    for (gv, &yv) in g.data_mut().iter_mut().zip(output.data().iter()) {
        *gv *= yv * (E::ONE - yv);
    }
    g
}
