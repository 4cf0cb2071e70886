//! Per-patch compute accounting. One "seg unit" is a single segmentation
//! forward pass at the standard input size; policy passes cost their
//! MAC share of a seg pass. Relative inference time is the per-patch total
//! in units of the one-pass reference, reported as mean and standard
//! deviation over patches — machine-independent by construction.

/// Cost record for one inferred patch: segmentation passes by pyramid level
/// plus the number of policy evaluations.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PatchCost {
    /// (level, seg passes at that level)
    pub seg_units: Vec<(usize, u32)>,
    pub policy_units: u32,
}

impl PatchCost {
    pub fn add_seg(&mut self, level: usize, units: u32) {
        for entry in &mut self.seg_units {
            if entry.0 == level {
                entry.1 += units;
                return;
            }
        }
        self.seg_units.push((level, units));
    }

    pub fn add_policy(&mut self, units: u32) {
        self.policy_units += units;
    }

    pub fn total_seg(&self) -> u32 {
        self.seg_units.iter().map(|(_, n)| n).sum()
    }

    pub fn merge(&mut self, other: &PatchCost) {
        for &(level, units) in &other.seg_units {
            self.add_seg(level, units);
        }
        self.policy_units += other.policy_units;
    }

    /// Patch cost in reference units.
    pub fn relative(&self, policy_ratio: f64) -> f64 {
        self.total_seg() as f64 + self.policy_units as f64 * policy_ratio
    }
}

#[derive(Debug, Clone, Default)]
pub struct CostLedger {
    entries: Vec<PatchCost>,
}

impl CostLedger {
    pub fn new() -> Self {
        CostLedger::default()
    }

    pub fn push(&mut self, cost: PatchCost) {
        self.entries.push(cost);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[PatchCost] {
        &self.entries
    }

    pub fn merge(&mut self, other: &CostLedger) {
        self.entries.extend(other.entries.iter().cloned());
    }

    pub fn relative_times(&self, policy_ratio: f64) -> Vec<f64> {
        self.entries
            .iter()
            .map(|e| e.relative(policy_ratio))
            .collect()
    }

    /// Mean and population standard deviation of per-patch relative time.
    /// A ledger of identical entries reports exactly zero spread.
    pub fn relative_time(&self, policy_ratio: f64) -> (f64, f64) {
        let times = self.relative_times(policy_ratio);
        if times.is_empty() {
            return (0.0, 0.0);
        }
        if times.iter().all(|&t| t == times[0]) {
            return (times[0], 0.0);
        }
        let n = times.len() as f64;
        let mean = times.iter().sum::<f64>() / n;
        let var = times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n;
        (mean, var.max(0.0).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn break_cost() -> PatchCost {
        let mut c = PatchCost::default();
        c.add_seg(0, 1);
        c.add_policy(1);
        c
    }

    fn zoom_cost() -> PatchCost {
        let mut c = PatchCost::default();
        c.add_seg(1, 4);
        c.add_policy(1);
        c
    }

    #[test]
    fn all_break_is_one_plus_ratio_with_zero_spread() {
        let mut ledger = CostLedger::new();
        for _ in 0..100 {
            ledger.push(break_cost());
        }
        let (mean, std) = ledger.relative_time(0.071);
        assert!((mean - 1.071).abs() < 1e-12);
        assert_eq!(std, 0.0);
    }

    #[test]
    fn all_zoom_is_four_plus_ratio() {
        let mut ledger = CostLedger::new();
        for _ in 0..50 {
            ledger.push(zoom_cost());
        }
        let (mean, std) = ledger.relative_time(0.071);
        assert!((mean - 4.071).abs() < 1e-12);
        assert_eq!(std, 0.0);
    }

    #[test]
    fn mean_is_linear_in_zoom_fraction() {
        // mean = 1.071 + 3z for rate 2 at one zoom step
        for zoomed in [0usize, 10, 25, 40] {
            let mut ledger = CostLedger::new();
            for i in 0..40 {
                ledger.push(if i < zoomed { zoom_cost() } else { break_cost() });
            }
            let z = zoomed as f64 / 40.0;
            let (mean, _) = ledger.relative_time(0.071);
            assert!((mean - (1.071 + 3.0 * z)).abs() < 1e-12);
        }
    }

    #[test]
    fn reported_operating_point_sits_inside_the_band() {
        // a selective policy must land strictly between the all-break and
        // all-zoom extremes; the published 2.71 mean does
        let ratio = 0.071;
        let lo = 1.0 + ratio;
        let hi = 4.0 + ratio;
        assert!(lo < 2.71 && 2.71 < hi);
    }

    #[test]
    fn order_invariance() {
        let mut a = CostLedger::new();
        let mut b = CostLedger::new();
        for i in 0..30 {
            if i % 3 == 0 {
                a.push(zoom_cost());
            } else {
                a.push(break_cost());
            }
        }
        for i in (0..30).rev() {
            if i % 3 == 0 {
                b.push(zoom_cost());
            } else {
                b.push(break_cost());
            }
        }
        assert_eq!(a.relative_time(0.2), b.relative_time(0.2));
    }

    #[test]
    fn deeper_recursion_accumulates_per_level() {
        // two zoom steps at rate 2: 16 leaf passes, 1 + 4 policy calls
        let mut c = PatchCost::default();
        c.add_policy(1);
        for _ in 0..4 {
            c.add_policy(1);
            c.add_seg(2, 4);
        }
        assert_eq!(c.total_seg(), 16);
        assert_eq!(c.policy_units, 5);
        assert!((c.relative(0.071) - (16.0 + 5.0 * 0.071)).abs() < 1e-12);
    }
}
