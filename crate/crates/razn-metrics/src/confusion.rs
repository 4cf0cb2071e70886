//! Confusion counts and the IOU family.
//!
//! Classes never seen in either truth or prediction (zero union) are
//! excluded from averages rather than scored as 0 or 1. Weighted IOU uses
//! weights proportional to inverse ground-truth frequency, normalized to
//! sum to one over the included classes.

use crate::error::{MetricsError, Result};

/// C x C matrix of (truth, prediction) pixel counts. Mergeable, so parallel
/// scorers can each own one and combine at the end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionAccumulator {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionAccumulator {
    pub fn new(classes: usize) -> Self {
        ConfusionAccumulator {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn add(&mut self, truth: usize, pred: usize) -> Result<()> {
        if truth >= self.classes || pred >= self.classes {
            return Err(MetricsError::BadClass {
                value: truth.max(pred),
                classes: self.classes,
            });
        }
        self.counts[truth * self.classes + pred] += 1;
        Ok(())
    }

    /// Scores one prediction mask against ground truth, both as flat
    /// class-index slices of the same extent.
    pub fn record(
        &mut self,
        truth: &[u8],
        pred: &[u8],
        extent: (usize, usize),
    ) -> Result<()> {
        let (h, w) = extent;
        if truth.len() != h * w || pred.len() != h * w {
            return Err(MetricsError::ExtentMismatch {
                a_h: h,
                a_w: truth.len() / w.max(1),
                b_h: h,
                b_w: pred.len() / w.max(1),
            });
        }
        for (&t, &p) in truth.iter().zip(pred.iter()) {
            self.add(t as usize, p as usize)?;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionAccumulator) {
        assert_eq!(self.classes, other.classes, "class count mismatch in merge");
        for (a, b) in self.counts.iter_mut().zip(other.counts.iter()) {
            *a += b;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    #[inline]
    pub fn count(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.classes + pred]
    }

    fn tp(&self, c: usize) -> u64 {
        self.count(c, c)
    }

    fn truth_total(&self, c: usize) -> u64 {
        (0..self.classes).map(|p| self.count(c, p)).sum()
    }

    fn pred_total(&self, c: usize) -> u64 {
        (0..self.classes).map(|t| self.count(t, c)).sum()
    }
}

/// IOU_c = TP / (TP + FP + FN); `None` when the union is empty.
pub fn iou_per_class(acc: &ConfusionAccumulator) -> Vec<Option<f64>> {
    (0..acc.classes())
        .map(|c| {
            let tp = acc.tp(c);
            let union = acc.truth_total(c) + acc.pred_total(c) - tp;
            if union == 0 {
                None
            } else {
                Some(tp as f64 / union as f64)
            }
        })
        .collect()
}

/// Average IOU over classes with non-empty union.
pub fn mean_iou(acc: &ConfusionAccumulator) -> Result<f64> {
    let ious: Vec<f64> = iou_per_class(acc).into_iter().flatten().collect();
    if ious.is_empty() {
        return Err(MetricsError::Undefined("every class has zero union".into()));
    }
    Ok(ious.iter().sum::<f64>() / ious.len() as f64)
}

/// Ground-truth pixel share per class.
pub fn class_frequencies(acc: &ConfusionAccumulator) -> Vec<f64> {
    let total = acc.total().max(1) as f64;
    (0..acc.classes())
        .map(|c| acc.truth_total(c) as f64 / total)
        .collect()
}

/// Sum of w_c * IOU_c with w_c proportional to 1/freq_c, normalized over the
/// included classes. Classes with zero frequency or zero union are excluded.
pub fn weighted_iou(acc: &ConfusionAccumulator, frequencies: &[f64]) -> Result<f64> {
    assert_eq!(frequencies.len(), acc.classes(), "one frequency per class");
    let ious = iou_per_class(acc);
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for (c, iou) in ious.iter().enumerate() {
        if frequencies[c] > 0.0 {
            if let Some(v) = iou {
                pairs.push((1.0 / frequencies[c], *v));
            }
        }
    }
    if pairs.is_empty() {
        return Err(MetricsError::Undefined(
            "no class has positive frequency and non-empty union".into(),
        ));
    }
    let norm: f64 = pairs.iter().map(|(w, _)| w).sum();
    Ok(pairs.iter().map(|(w, v)| w / norm * v).sum())
}

/// IOU of a merged label set: all classes in `group` count as one label.
pub fn merged_iou(acc: &ConfusionAccumulator, group: &[usize]) -> Result<f64> {
    let in_group = |c: usize| group.contains(&c);
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut fn_ = 0u64;
    for t in 0..acc.classes() {
        for p in 0..acc.classes() {
            let n = acc.count(t, p);
            match (in_group(t), in_group(p)) {
                (true, true) => tp += n,
                (false, true) => fp += n,
                (true, false) => fn_ += n,
                (false, false) => {}
            }
        }
    }
    let union = tp + fp + fn_;
    if union == 0 {
        return Err(MetricsError::Undefined(format!(
            "merged group {group:?} has zero union"
        )));
    }
    Ok(tp as f64 / union as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn acc_from(truth: &[u8], pred: &[u8], classes: usize) -> ConfusionAccumulator {
        let mut acc = ConfusionAccumulator::new(classes);
        acc.record(truth, pred, (1, truth.len())).unwrap();
        acc
    }

    #[test]
    fn perfect_prediction_scores_one() {
        let t = [0u8, 1, 2, 3, 1, 0];
        let acc = acc_from(&t, &t, 4);
        for iou in iou_per_class(&acc).into_iter().flatten() {
            assert_eq!(iou, 1.0);
        }
        assert_eq!(mean_iou(&acc).unwrap(), 1.0);
    }

    #[test]
    fn disjoint_masks_score_zero() {
        let t = [1u8, 1, 1, 1];
        let p = [2u8, 2, 2, 2];
        let acc = acc_from(&t, &p, 4);
        assert_eq!(iou_per_class(&acc)[1], Some(0.0));
        assert_eq!(iou_per_class(&acc)[2], Some(0.0));
    }

    #[test]
    fn one_third_overlap_case() {
        // truth has 2 pixels of class 1, prediction 2 pixels, 1 overlapping:
        // IOU = 1 / (1 + 1 + 1) = 1/3
        let t = [1u8, 1, 0, 0];
        let p = [1u8, 0, 1, 0];
        let acc = acc_from(&t, &p, 2);
        assert!((iou_per_class(&acc)[1].unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn absent_classes_are_excluded_from_the_mean() {
        let t = [0u8, 0, 1, 1];
        let p = [0u8, 1, 1, 1];
        let acc = acc_from(&t, &p, 4);
        let ious = iou_per_class(&acc);
        assert!(ious[2].is_none() && ious[3].is_none());
        let expected = (0.5 + (2.0 / 3.0)) / 2.0;
        assert!((mean_iou(&acc).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn all_empty_is_undefined() {
        let acc = ConfusionAccumulator::new(4);
        assert!(mean_iou(&acc).is_err());
    }

    #[test]
    fn equal_frequencies_reduce_weighted_to_mean() {
        let t = [0u8, 0, 1, 1, 2, 2, 3, 3];
        let p = [0u8, 1, 1, 1, 2, 3, 3, 3];
        let acc = acc_from(&t, &p, 4);
        let freqs = class_frequencies(&acc);
        assert!(freqs.iter().all(|&f| (f - 0.25).abs() < 1e-12));
        let w = weighted_iou(&acc, &freqs).unwrap();
        let m = mean_iou(&acc).unwrap();
        assert!((w - m).abs() < 1e-12);
    }

    #[test]
    fn inverse_frequency_weights_hand_case() {
        // two classes, freqs (0.9, 0.1), IOUs (1.0, 0.0):
        // weights (1/0.9, 1/0.1) normalized = (0.1, 0.9) -> 0.1
        let mut acc = ConfusionAccumulator::new(2);
        for _ in 0..9 {
            acc.add(0, 0).unwrap();
        }
        acc.add(1, 0).unwrap(); // class 1 mispredicted
        let freqs = class_frequencies(&acc);
        assert!((freqs[0] - 0.9).abs() < 1e-12);
        // class 0 IOU: tp 9, fp 1, fn 0 -> 0.9; class 1 IOU 0
        // weights (1/.9, 1/.1)/sum -> (1/9 -> 0.1, 0.9)
        let w = weighted_iou(&acc, &freqs).unwrap();
        let expected = 0.1 * 0.9 + 0.9 * 0.0;
        assert!((w - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_frequency_classes_are_skipped() {
        let t = [0u8, 0, 1, 1];
        let p = [0u8, 0, 1, 3];
        let acc = acc_from(&t, &p, 4);
        let freqs = class_frequencies(&acc);
        assert_eq!(freqs[3], 0.0);
        // class 3 appears only in prediction: zero frequency, excluded
        let w = weighted_iou(&acc, &freqs).unwrap();
        assert!(w > 0.0);
    }

    #[test]
    fn merged_groups_hand_case() {
        // truth: class 2 everywhere; prediction: class 3 everywhere.
        // merged {2,3} scores 1.0 even though per-class IOUs are 0.
        let t = [2u8; 4];
        let p = [3u8; 4];
        let acc = acc_from(&t, &p, 4);
        assert_eq!(merged_iou(&acc, &[2, 3]).unwrap(), 1.0);
        assert!(merged_iou(&acc, &[0, 1]).is_err());
    }

    #[test]
    fn accumulators_are_additive() {
        let t1 = [0u8, 1, 2, 0];
        let p1 = [0u8, 1, 1, 0];
        let t2 = [3u8, 3, 2, 1];
        let p2 = [3u8, 2, 2, 1];
        let mut separate_a = acc_from(&t1, &p1, 4);
        let separate_b = acc_from(&t2, &p2, 4);
        separate_a.merge(&separate_b);

        let joint = acc_from(
            &[t1.as_slice(), t2.as_slice()].concat(),
            &[p1.as_slice(), p2.as_slice()].concat(),
            4,
        );
        assert_eq!(separate_a, joint);
    }
}
