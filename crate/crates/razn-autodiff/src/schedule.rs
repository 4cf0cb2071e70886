/// Step-wise learning rate: rate(t) = initial * factor^floor(t / period).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub initial: f64,
    pub decay_factor: f64,
    pub decay_period: u64,
}

impl Default for LrSchedule {
    fn default() -> Self {
        LrSchedule {
            initial: 0.01,
            decay_factor: 0.1,
            decay_period: 50_000,
        }
    }
}

impl LrSchedule {
    pub fn lr_at(&self, step: u64) -> f64 {
        let k = (step / self.decay_period) as i32;
        self.initial * self.decay_factor.powi(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule_values() {
        let s = LrSchedule::default();
        assert_eq!(s.lr_at(0), 0.01);
        assert_eq!(s.lr_at(49_999), 0.01);
        assert!((s.lr_at(50_000) - 0.001).abs() < 1e-15);
        assert!((s.lr_at(150_000) - 1e-5).abs() < 1e-18);
    }

    #[test]
    fn rate_stays_positive() {
        let s = LrSchedule::default();
        for step in (0..1_000_000).step_by(37_001) {
            assert!(s.lr_at(step) > 0.0);
        }
    }
}
