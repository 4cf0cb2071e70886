//! Analytic slide anatomy: wobbled elliptical tissue blobs on glass, with
//! non-overlapping abnormal regions placed inside the tissue. Membership is
//! a pure function of (seed, position), so any tile can be evaluated
//! independently.

use crate::rng::{domains, KeyedRng};
use crate::spec::SynthSpec;

#[derive(Debug, Clone)]
pub struct Blob {
    cx: f64,
    cy: f64,
    a: f64,
    b: f64,
    amp1: f64,
    phase1: f64,
    amp2: f64,
    phase2: f64,
    /// Conservative squared radius for the bounding-circle fast path.
    reject_r2: f64,
}

impl Blob {
    fn new(cx: f64, cy: f64, a: f64, b: f64, rng: &mut KeyedRng) -> Self {
        let amp1 = rng.range(0.08, 0.16);
        let phase1 = rng.range(0.0, std::f64::consts::TAU);
        let amp2 = rng.range(0.04, 0.09);
        let phase2 = rng.range(0.0, std::f64::consts::TAU);
        let max_r = a.max(b) * (1.0 + amp1 + amp2);
        Blob {
            cx,
            cy,
            a,
            b,
            amp1,
            phase1,
            amp2,
            phase2,
            reject_r2: max_r * max_r,
        }
    }

    #[inline]
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let dx = x - self.cx;
        let dy = y - self.cy;
        if dx * dx + dy * dy > self.reject_r2 {
            return false;
        }
        let nx = dx / self.a;
        let ny = dy / self.b;
        let rho2 = nx * nx + ny * ny;
        let outer = 1.0 + self.amp1 + self.amp2;
        if rho2 > outer * outer {
            return false;
        }
        let theta = ny.atan2(nx);
        let boundary = 1.0
            + self.amp1 * (3.0 * theta + self.phase1).sin()
            + self.amp2 * (5.0 * theta + self.phase2).sin();
        rho2.sqrt() <= boundary
    }

    pub fn max_radius(&self) -> f64 {
        self.reject_r2.sqrt()
    }

    pub fn center(&self) -> (f64, f64) {
        (self.cx, self.cy)
    }
}

#[derive(Debug, Clone)]
pub struct RegionModel {
    dim: f64,
    tissue: Vec<Blob>,
    /// (class index 1..=3, blob)
    rois: Vec<(u8, Blob)>,
    jitter: JitterField,
}

#[derive(Debug, Clone)]
struct JitterField {
    amp: f64,
    px: [f64; 4],
    py: [f64; 4],
}

impl JitterField {
    fn new(seed: u64, amp: f64) -> Self {
        let mut rng = KeyedRng::new(seed, domains::JITTER_FIELD, 0, 0);
        let mut px = [0.0; 4];
        let mut py = [0.0; 4];
        for i in 0..4 {
            px[i] = rng.range(0.0, std::f64::consts::TAU);
            py[i] = rng.range(0.0, std::f64::consts::TAU);
        }
        JitterField { amp, px, py }
    }

    /// Smooth displacement with ~unit peak amplitude per axis, scaled by amp.
    #[inline]
    fn displace(&self, x: f64, y: f64) -> (f64, f64) {
        let dx = 0.6 * (x / 37.0 + self.px[0]).sin() * (y / 23.0 + self.px[1]).cos()
            + 0.4 * (y / 61.0 + self.px[2]).sin() * (x / 47.0 + self.px[3]).cos();
        let dy = 0.6 * (y / 41.0 + self.py[0]).sin() * (x / 29.0 + self.py[1]).cos()
            + 0.4 * (x / 53.0 + self.py[2]).sin() * (y / 43.0 + self.py[3]).cos();
        (self.amp * dx, self.amp * dy)
    }
}

impl RegionModel {
    pub fn build(spec: &SynthSpec) -> Self {
        let dim = spec.finest_dim as f64;
        let mut tissue = Vec::new();

        if spec.tissue_fraction > 0.0 {
            let mut rng = KeyedRng::new(spec.seed, domains::TISSUE_BLOBS, 0, 0);
            // three blobs around fixed anchors; sizes hit the target area
            let anchors = [(0.30, 0.32), (0.70, 0.38), (0.46, 0.72)];
            let per_blob_area = spec.tissue_fraction * dim * dim / anchors.len() as f64;
            for (i, &(ax, ay)) in anchors.iter().enumerate() {
                let mut blob_rng = KeyedRng::new(spec.seed, domains::TISSUE_BLOBS, i as u64, 1);
                let cx = (ax + rng.range(-0.04, 0.04)) * dim;
                let cy = (ay + rng.range(-0.04, 0.04)) * dim;
                let aspect = rng.range(0.8, 1.25);
                let mut a = (per_blob_area / std::f64::consts::PI * aspect).sqrt();
                let mut b = a / aspect;
                // keep the wobbled outline inside the canvas
                let margin = 1.0 / 1.3;
                let max_a = (cx.min(dim - cx)) * margin;
                let max_b = (cy.min(dim - cy)) * margin;
                if a > max_a {
                    a = max_a;
                }
                if b > max_b {
                    b = max_b;
                }
                tissue.push(Blob::new(cx, cy, a, b, &mut blob_rng));
            }
        }

        let model_wo_rois = RegionModel {
            dim,
            tissue,
            rois: Vec::new(),
            jitter: JitterField::new(spec.seed, spec.label_jitter_px),
        };

        // abnormal regions inside the tissue, non-overlapping across classes
        let mut rois: Vec<(u8, Blob)> = Vec::new();
        let blobs_per_class = 3usize;
        for (ci, &fraction) in spec.class_fractions.iter().enumerate() {
            if fraction <= 0.0 {
                continue;
            }
            let class = (ci + 1) as u8;
            let per_blob_area = fraction * dim * dim / blobs_per_class as f64;
            for bi in 0..blobs_per_class {
                let mut rng = KeyedRng::new(
                    spec.seed,
                    domains::ROI_BLOBS,
                    class as u64,
                    bi as u64,
                );
                let aspect = rng.range(0.75, 1.3);
                let a = (per_blob_area / std::f64::consts::PI * aspect).sqrt();
                let b = a / aspect;
                let reach = a.max(b) * 1.3;

                let mut placed = None;
                for _ in 0..600 {
                    let cx = rng.range(reach, dim - reach);
                    let cy = rng.range(reach, dim - reach);
                    // the blob core should sit on tissue
                    let core_ok = [
                        (cx, cy),
                        (cx + 0.6 * a, cy),
                        (cx - 0.6 * a, cy),
                        (cx, cy + 0.6 * b),
                        (cx, cy - 0.6 * b),
                    ]
                    .iter()
                    .all(|&(px, py)| model_wo_rois.tissue_at(px, py));
                    if !core_ok {
                        continue;
                    }
                    let clear = rois.iter().all(|(_, other)| {
                        let (ox, oy) = other.center();
                        let d2 = (cx - ox) * (cx - ox) + (cy - oy) * (cy - oy);
                        let min_d = (reach + other.max_radius()) * 1.05;
                        d2 > min_d * min_d
                    });
                    if clear {
                        placed = Some((cx, cy));
                        break;
                    }
                }
                if let Some((cx, cy)) = placed {
                    rois.push((class, Blob::new(cx, cy, a, b, &mut rng)));
                }
            }
        }

        RegionModel {
            rois,
            ..model_wo_rois
        }
    }

    pub fn tissue_at(&self, x: f64, y: f64) -> bool {
        self.tissue.iter().any(|b| b.contains(x, y))
    }

    /// True class at a finest-level position: 0 for glass and normal tissue,
    /// 1..=3 inside an abnormal region (clipped to tissue).
    pub fn class_at(&self, x: f64, y: f64) -> u8 {
        if !self.tissue_at(x, y) {
            return 0;
        }
        for (class, blob) in &self.rois {
            if blob.contains(x, y) {
                return *class;
            }
        }
        0
    }

    /// Annotated class: the true field sampled through the smooth jitter
    /// displacement, which erodes/dilates region boundaries by up to the
    /// configured amplitude.
    pub fn label_at(&self, x: f64, y: f64) -> u8 {
        let (dx, dy) = self.jitter.displace(x, y);
        let jx = (x + dx).clamp(0.0, self.dim - 1.0);
        let jy = (y + dy).clamp(0.0, self.dim - 1.0);
        self.class_at(jx, jy)
    }

    pub fn roi_count(&self) -> usize {
        self.rois.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_tissue_means_all_glass() {
        let spec = SynthSpec {
            tissue_fraction: 0.0,
            class_fractions: [0.0, 0.0, 0.0],
            finest_dim: 1024,
            ..SynthSpec::default()
        };
        let model = RegionModel::build(&spec);
        for (x, y) in [(0.0, 0.0), (512.0, 512.0), (1000.0, 73.0)] {
            assert_eq!(model.class_at(x, y), 0);
            assert!(!model.tissue_at(x, y));
        }
    }

    #[test]
    fn model_is_deterministic() {
        let spec = SynthSpec {
            finest_dim: 1024,
            ..SynthSpec::default()
        };
        let a = RegionModel::build(&spec);
        let b = RegionModel::build(&spec);
        for i in 0..2000 {
            let x = (i * 37 % 1024) as f64;
            let y = (i * 91 % 1024) as f64;
            assert_eq!(a.class_at(x, y), b.class_at(x, y));
            assert_eq!(a.label_at(x, y), b.label_at(x, y));
        }
    }

    #[test]
    fn all_classes_get_placed() {
        let spec = SynthSpec {
            finest_dim: 2048,
            ..SynthSpec::default()
        };
        let model = RegionModel::build(&spec);
        assert!(model.roi_count() >= 6, "placed {} rois", model.roi_count());
        let mut seen = [false; 4];
        for yi in 0..256 {
            for xi in 0..256 {
                let c = model.class_at(xi as f64 * 8.0, yi as f64 * 8.0);
                seen[c as usize] = true;
            }
        }
        assert!(seen[1] && seen[2] && seen[3], "seen {seen:?}");
    }

    #[test]
    fn labels_differ_from_truth_only_near_boundaries() {
        let spec = SynthSpec {
            finest_dim: 1024,
            ..SynthSpec::default()
        };
        let model = RegionModel::build(&spec);
        let mut diff = 0u32;
        let mut total = 0u32;
        for yi in 0..512 {
            for xi in 0..512 {
                let (x, y) = (xi as f64 * 2.0, yi as f64 * 2.0);
                total += 1;
                if model.class_at(x, y) != model.label_at(x, y) {
                    diff += 1;
                    // a disagreeing pixel must be within jitter reach of a
                    // different-class pixel
                    let c = model.class_at(x, y);
                    let near = (-4i32..=4)
                        .flat_map(|dy| (-4i32..=4).map(move |dx| (dx, dy)))
                        .any(|(dx, dy)| {
                            model.class_at(x + dx as f64, y + dy as f64) != c
                        });
                    assert!(near, "jittered label far from any boundary at {x},{y}");
                }
            }
        }
        let share = diff as f64 / total as f64;
        assert!(share < 0.08, "too many jittered labels: {share}");
        assert!(diff > 0, "jitter had no effect at all");
    }
}
