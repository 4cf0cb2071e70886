//! Central finite-difference gradient checking. Verification utility used by
//! the test suites: it only ever calls op *forwards*, so it stays independent
//! of the hand-written backward passes it is used to check.

use crate::element::Element;
use crate::tensor::Tensor;

/// Small deterministic generator so checks do not depend on any shared rng.
pub struct CheckRng(u64);

impl CheckRng {
    pub fn new(seed: u64) -> Self {
        CheckRng(seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        // splitmix64
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.uniform() * (hi - lo)
    }

    pub fn tensor(&mut self, shape: &[usize], lo: f64, hi: f64) -> Tensor<f64> {
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| self.range(lo, hi)).collect();
        Tensor::from_vec(shape, data)
    }

    /// Values bounded away from zero, for kink-free relu checks.
    pub fn tensor_away_from_zero(&mut self, shape: &[usize], min_abs: f64, max_abs: f64) -> Tensor<f64> {
        let n: usize = shape.iter().product();
        let data = (0..n)
            .map(|_| {
                let mag = self.range(min_abs, max_abs);
                if self.uniform() < 0.5 {
                    -mag
                } else {
                    mag
                }
            })
            .collect();
        Tensor::from_vec(shape, data)
    }
}

/// Numeric gradient of a scalar-valued function by central differences,
/// one probe pair per element.
pub fn central_diff<F>(f: F, x: &Tensor<f64>, h: f64) -> Tensor<f64>
where
    F: Fn(&Tensor<f64>) -> f64,
{
    let mut grad = Tensor::zeros(x.shape());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + h;
        let fp = f(&probe);
        probe.data_mut()[i] = orig - h;
        let fm = f(&probe);
        probe.data_mut()[i] = orig;
        grad.data_mut()[i] = (fp - fm) / (2.0 * h);
    }
    grad
}

/// Relative error between analytic and numeric gradients:
/// ||a - n||_2 / max(||a||_2 + ||n||_2, floor).
pub fn rel_err(analytic: &Tensor<f64>, numeric: &Tensor<f64>) -> f64 {
    assert_eq!(analytic.shape(), numeric.shape(), "rel_err shape mismatch");
    let mut diff = 0.0;
    let mut na = 0.0;
    let mut nn = 0.0;
    for (a, n) in analytic.data().iter().zip(numeric.data().iter()) {
        diff += (a - n) * (a - n);
        na += a * a;
        nn += n * n;
    }
    diff.sqrt() / (na.sqrt() + nn.sqrt()).max(1e-12)
}

/// Scalar projection <seed, t>, turning any op output into a scalar so its
/// input gradient can be probed by central differences.
pub fn dot<E: Element>(seed: &Tensor<E>, t: &Tensor<E>) -> f64 {
    assert_eq!(seed.shape(), t.shape(), "dot shape mismatch");
    seed.data()
        .iter()
        .zip(t.data().iter())
        .map(|(a, b)| a.to_f64() * b.to_f64())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_diff_matches_quadratic() {
        // f(x) = sum x_i^2, grad = 2x
        let mut rng = CheckRng::new(3);
        let x = rng.tensor(&[7], -2.0, 2.0);
        let num = central_diff(
            |t| t.data().iter().map(|v| v * v).sum::<f64>(),
            &x,
            1e-6,
        );
        let ana = x.map(|v| 2.0 * v);
        assert!(rel_err(&ana, &num) < 1e-8);
    }
}
