//! Deterministic parameter initialization: fan-in-scaled normal for weights,
//! zeros for biases and beta, ones for gamma.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::tensor::Tensor;

/// Standard normal via Box-Muller over the rng's uniform output, so the byte
/// stream is fully pinned by this crate rather than a distribution library.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = loop {
        let v = rng.random::<f64>();
        if v > 1e-12 {
            break v;
        }
    };
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// He-style init: N(0, sqrt(2 / fan_in)).
pub fn fan_in_normal(rng: &mut ChaCha8Rng, shape: &[usize], fan_in: usize) -> Tensor<f32> {
    let std = (2.0 / fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| (normal(rng) * std) as f32).collect();
    Tensor::from_vec(shape, data)
}

pub fn conv_weight(rng: &mut ChaCha8Rng, k: usize, c: usize, kh: usize, kw: usize) -> Tensor<f32> {
    fan_in_normal(rng, &[k, c, kh, kw], c * kh * kw)
}

pub fn linear_weight(rng: &mut ChaCha8Rng, k: usize, c: usize) -> Tensor<f32> {
    fan_in_normal(rng, &[k, c], c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn seeded_init_is_reproducible() {
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        let wa = conv_weight(&mut a, 4, 3, 3, 3);
        let wb = conv_weight(&mut b, 4, 3, 3, 3);
        assert_eq!(wa.data(), wb.data());
    }

    #[test]
    fn spread_tracks_fan_in() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = fan_in_normal(&mut rng, &[4096], 8);
        let var: f64 = w.data().iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>() / 4096.0;
        // expected variance 2/8 = 0.25
        assert!((var - 0.25).abs() < 0.05, "sample variance {var}");
    }
}
