//! Named parameter storage with per-parameter Adam moments.
//!
//! A store owns every array belonging to one network: trainable weights plus
//! non-trainable state such as batch-norm running estimates. Mutation is
//! single-writer by contract; concurrent readers are fine.

use std::collections::HashMap;

use crate::element::Element;
use crate::error::{AutodiffError, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct Param {
    pub name: String,
    pub value: Tensor<f32>,
    pub grad: Tensor<f32>,
    pub adam_m: Tensor<f32>,
    pub adam_v: Tensor<f32>,
    pub trainable: bool,
}

#[derive(Debug, Clone)]
pub struct ParamStore {
    params: Vec<Param>,
    index: HashMap<String, usize>,
    /// Adam step count. Incremented once per `adam_step`.
    pub adam_t: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
    /// Decoupled weight decay; 0 disables it.
    pub weight_decay: f32,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

impl Default for ParamStore {
    fn default() -> Self {
        Self::new()
    }
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore {
            params: Vec::new(),
            index: HashMap::new(),
            adam_t: 0,
        }
    }

    pub fn register(&mut self, name: &str, value: Tensor<f32>, trainable: bool) -> Result<()> {
        if self.index.contains_key(name) {
            return Err(AutodiffError::DuplicateParam(name.to_string()));
        }
        let shape = value.shape().to_vec();
        self.index.insert(name.to_string(), self.params.len());
        self.params.push(Param {
            name: name.to_string(),
            grad: Tensor::zeros(&shape),
            adam_m: Tensor::zeros(&shape),
            adam_v: Tensor::zeros(&shape),
            value,
            trainable,
        });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Parameters in registration order.
    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn get(&self, name: &str) -> Result<&Param> {
        self.index
            .get(name)
            .map(|&i| &self.params[i])
            .ok_or_else(|| AutodiffError::UnknownParam(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Param> {
        match self.index.get(name) {
            Some(&i) => Ok(&mut self.params[i]),
            None => Err(AutodiffError::UnknownParam(name.to_string())),
        }
    }

    pub fn value(&self, name: &str) -> Result<&Tensor<f32>> {
        Ok(&self.get(name)?.value)
    }

    pub fn accumulate_grad(&mut self, name: &str, grad: &Tensor<f32>) -> Result<()> {
        let p = self.get_mut(name)?;
        if p.grad.shape() != grad.shape() {
            return Err(AutodiffError::ShapeMismatch {
                op: "accumulate_grad",
                detail: format!(
                    "parameter `{name}` has shape {:?}, gradient {:?}",
                    p.grad.shape(),
                    grad.shape()
                ),
            });
        }
        p.grad.add_assign(grad);
        Ok(())
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    /// Scales every trainable gradient, e.g. by 1/batch.
    pub fn scale_grads(&mut self, factor: f32) {
        for p in &mut self.params {
            if p.trainable {
                p.grad.scale(factor);
            }
        }
    }

    /// One Adam update over every trainable parameter, then gradients are
    /// zeroed. Rejects non-finite gradients before touching any value.
    pub fn adam_step(&mut self, lr: f32, cfg: AdamConfig) -> Result<()> {
        for p in &self.params {
            if !p.trainable {
                continue;
            }
            if let Some((index, value)) = p.grad.find_non_finite() {
                return Err(AutodiffError::NonFiniteGradient {
                    name: p.name.clone(),
                    index,
                    value,
                });
            }
        }
        self.adam_t += 1;
        let t = self.adam_t as i32;
        let bias1 = 1.0 - cfg.beta1.to_f64().powi(t) as f32;
        let bias2 = 1.0 - cfg.beta2.to_f64().powi(t) as f32;
        for p in &mut self.params {
            if !p.trainable {
                continue;
            }
            let g = p.grad.data();
            let m = p.adam_m.data_mut();
            let v = p.adam_v.data_mut();
            for i in 0..g.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            }
            let value = p.value.data_mut();
            for i in 0..value.len() {
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                value[i] -= lr * (m_hat / (v_hat.sqrt() + cfg.eps) + cfg.weight_decay * value[i]);
            }
            p.grad.fill(0.0);
        }
        Ok(())
    }

    /// Bitwise equality over names, order, flags, values, moments and step
    /// count. Used by determinism tests.
    pub fn bitwise_eq(&self, other: &ParamStore) -> bool {
        if self.adam_t != other.adam_t || self.params.len() != other.params.len() {
            return false;
        }
        self.params.iter().zip(other.params.iter()).all(|(a, b)| {
            a.name == b.name
                && a.trainable == b.trainable
                && tensor_bits_eq(&a.value, &b.value)
                && tensor_bits_eq(&a.adam_m, &b.adam_m)
                && tensor_bits_eq(&a.adam_v, &b.adam_v)
        })
    }
}

pub fn tensor_bits_eq(a: &Tensor<f32>, b: &Tensor<f32>) -> bool {
    a.shape() == b.shape()
        && a.data()
            .iter()
            .zip(b.data().iter())
            .all(|(x, y)| x.to_bits() == y.to_bits())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_store(v: f32) -> ParamStore {
        let mut s = ParamStore::new();
        s.register("w", Tensor::scalar(v), true).unwrap();
        s
    }

    #[test]
    fn zero_gradient_leaves_values_identical() {
        let mut s = scalar_store(1.5);
        let before = s.value("w").unwrap().clone();
        s.adam_step(0.01, AdamConfig::default()).unwrap();
        assert!(tensor_bits_eq(&before, s.value("w").unwrap()));
        assert_eq!(s.adam_t, 1);
    }

    #[test]
    fn unit_gradient_first_step_moves_by_lr() {
        // hand evaluation: m_hat = v_hat = 1 at t=1, so delta = lr/(1+eps)
        let mut s = scalar_store(2.0);
        s.get_mut("w").unwrap().grad.fill(1.0);
        s.adam_step(0.01, AdamConfig::default()).unwrap();
        let moved = 2.0 - s.value("w").unwrap().data()[0];
        assert!((moved - 0.01).abs() < 1e-6, "moved {moved}");
        // gradients zeroed after the step
        assert!(s.get("w").unwrap().grad.data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn identical_stores_stay_bitwise_identical() {
        let mut a = scalar_store(0.7);
        let mut b = scalar_store(0.7);
        for step in 0..25 {
            let g = (step as f32 * 0.37).sin();
            a.get_mut("w").unwrap().grad.fill(g);
            b.get_mut("w").unwrap().grad.fill(g);
            a.adam_step(0.003, AdamConfig::default()).unwrap();
            b.adam_step(0.003, AdamConfig::default()).unwrap();
        }
        assert!(a.bitwise_eq(&b));
    }

    #[test]
    fn weight_decay_shrinks_values_without_gradient() {
        let mut s = scalar_store(2.0);
        let cfg = AdamConfig {
            weight_decay: 0.1,
            ..AdamConfig::default()
        };
        s.adam_step(0.01, cfg).unwrap();
        // pure decay step: 2.0 - 0.01*0.1*2.0
        let v = s.value("w").unwrap().data()[0];
        assert!((v - 1.998).abs() < 1e-6, "value {v}");
    }

    #[test]
    fn non_finite_gradient_aborts_with_name() {
        let mut s = scalar_store(1.0);
        s.get_mut("w").unwrap().grad.fill(f32::NAN);
        match s.adam_step(0.01, AdamConfig::default()) {
            Err(AutodiffError::NonFiniteGradient { name, .. }) => assert_eq!(name, "w"),
            other => panic!("expected NonFiniteGradient, got {other:?}"),
        }
    }

    #[test]
    fn non_trainable_params_are_skipped() {
        let mut s = ParamStore::new();
        s.register("stat", Tensor::scalar(3.0), false).unwrap();
        s.get_mut("stat").unwrap().grad.fill(10.0);
        s.adam_step(0.1, AdamConfig::default()).unwrap();
        assert_eq!(s.value("stat").unwrap().data()[0], 3.0);
    }

    #[test]
    fn duplicate_registration_is_rejected() {
        let mut s = scalar_store(0.0);
        assert!(matches!(
            s.register("w", Tensor::scalar(0.0), true),
            Err(AutodiffError::DuplicateParam(_))
        ));
    }
}
