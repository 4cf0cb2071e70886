//! Validates the zoom-signal property of a generated dataset: how separable
//! the two carcinoma analogues look at each pyramid level, measured by the
//! total-variation distance between their local dark-dot-count histograms.

use std::fmt;

use razn_pyramid::{PatchRef, PyramidDataset};

use crate::error::Result;

pub const WINDOW: usize = 4;
pub const DARK_LUMINANCE: f32 = 0.65;

#[derive(Debug, Clone)]
pub struct LevelSeparability {
    pub level: usize,
    pub windows_in_situ: u64,
    pub windows_invasive: u64,
    /// Total-variation distance in [0,1]; `None` when a class is absent at
    /// this level.
    pub score: Option<f64>,
    pub notice: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ConfusabilityReport {
    pub levels: Vec<LevelSeparability>,
}

impl ConfusabilityReport {
    pub fn score_at(&self, level: usize) -> Option<f64> {
        self.levels.iter().find(|l| l.level == level)?.score
    }
}

impl fmt::Display for ConfusabilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# class 2 vs 3 separability by level")?;
        for l in &self.levels {
            match l.score {
                Some(s) => writeln!(
                    f,
                    "level {} separability = {s:.4} (windows {} / {})",
                    l.level, l.windows_in_situ, l.windows_invasive
                )?,
                None => writeln!(
                    f,
                    "level {} separability = n/a ({})",
                    l.level,
                    l.notice.as_deref().unwrap_or("class absent")
                )?,
            }
        }
        Ok(())
    }
}

/// Luminance-thresholded dot count per aligned WINDOW x WINDOW patch whose
/// labels are uniformly one class; histograms compared between classes.
pub fn confusability_report(ds: &PyramidDataset) -> Result<ConfusabilityReport> {
    let mut reader = ds.reader();
    let ts = ds.tile_size();
    let bins = WINDOW * WINDOW + 1;
    let mut levels = Vec::new();

    for level in 0..ds.levels() {
        let (lh, lw) = ds.level_dims(level);
        let mut hist2 = vec![0u64; bins];
        let mut hist3 = vec![0u64; bins];

        for tile_row in 0..lh / ts {
            for tile_col in 0..lw / ts {
                let patch = PatchRef::new(level, tile_row * ts, tile_col * ts, ts, ts);
                let (img, labels) = reader.read_patch(&patch)?;
                let plane = ts * ts;
                for wr in (0..ts).step_by(WINDOW) {
                    'window: for wc in (0..ts).step_by(WINDOW) {
                        let class = labels.at(wr, wc);
                        if class != 2 && class != 3 {
                            continue;
                        }
                        let mut dark = 0usize;
                        for r in wr..wr + WINDOW {
                            for c in wc..wc + WINDOW {
                                if labels.at(r, c) != class {
                                    continue 'window;
                                }
                                let idx = r * ts + c;
                                let lum = 0.299 * img.data()[idx]
                                    + 0.587 * img.data()[plane + idx]
                                    + 0.114 * img.data()[2 * plane + idx];
                                if lum < DARK_LUMINANCE {
                                    dark += 1;
                                }
                            }
                        }
                        if class == 2 {
                            hist2[dark] += 1;
                        } else {
                            hist3[dark] += 1;
                        }
                    }
                }
            }
        }

        let n2: u64 = hist2.iter().sum();
        let n3: u64 = hist3.iter().sum();
        let entry = if n2 == 0 || n3 == 0 {
            LevelSeparability {
                level,
                windows_in_situ: n2,
                windows_invasive: n3,
                score: None,
                notice: Some(format!(
                    "class {} has no uniform windows at this level",
                    if n2 == 0 { 2 } else { 3 }
                )),
            }
        } else {
            let tv = 0.5
                * hist2
                    .iter()
                    .zip(hist3.iter())
                    .map(|(&a, &b)| (a as f64 / n2 as f64 - b as f64 / n3 as f64).abs())
                    .sum::<f64>();
            LevelSeparability {
                level,
                windows_in_situ: n2,
                windows_invasive: n3,
                score: Some(tv),
                notice: None,
            }
        };
        levels.push(entry);
    }

    Ok(ConfusabilityReport { levels })
}
