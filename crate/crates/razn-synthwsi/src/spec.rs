//! Generator specification. Maps 1:1 to the TOML spec file accepted by the
//! CLI.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SynthError};

/// How a class scatters its dots at the finest level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arrangement {
    /// `dots_per_cell` dots uniformly placed within each texture cell.
    Random,
    /// One dot per `spacing`-sized block, at the block center plus
    /// `displacement` toward a block-hashed diagonal. Zero displacement
    /// gives a jittered lattice; a displacement around a quarter block
    /// moves energy between sub-block quadrants without changing any
    /// block-integrated quantity, which is what keeps such classes
    /// indistinguishable after coarse downsampling.
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassTexture {
    pub arrangement: Arrangement,
    pub dot_radius: f64,
    /// Mean dots per texture cell (Random only).
    pub dots_per_cell: f64,
    /// Block edge in finest-level pixels (Grid only).
    pub spacing: f64,
    /// Diagonal shift off the block center in finest-level pixels (Grid only).
    pub displacement: f64,
}

impl ClassTexture {
    pub fn random(dots_per_cell: f64, dot_radius: f64) -> Self {
        ClassTexture {
            arrangement: Arrangement::Random,
            dot_radius,
            dots_per_cell,
            spacing: 0.0,
            displacement: 0.0,
        }
    }

    pub fn grid(spacing: f64, displacement: f64, dot_radius: f64) -> Self {
        ClassTexture {
            arrangement: Arrangement::Grid,
            dot_radius,
            dots_per_cell: 0.0,
            spacing,
            displacement,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextureParams {
    /// Texture cell edge in finest-level pixels.
    pub cell_size: usize,
    pub normal: ClassTexture,
    pub benign: ClassTexture,
    pub in_situ: ClassTexture,
    pub invasive: ClassTexture,
}

impl Default for TextureParams {
    fn default() -> Self {
        TextureParams {
            cell_size: 16,
            // normal tissue: bare wash with rare small dots
            normal: ClassTexture::random(0.15, 1.2),
            // benign: three large dots per cell, contained, with exactly the
            // same ink share as the carcinoma classes: after any blur that
            // integrates past the dot scale, all three inked classes have
            // identical mean and (near) zero variance
            benign: ClassTexture::random(3.0, 2.54),
            // the two carcinoma analogues place one contained dot per 4-px
            // block (reach = jitter 0.25 + displacement + radius < 2), so
            // every block-integrated statistic matches exactly and only the
            // sub-block placement differs
            in_situ: ClassTexture::grid(4.0, 0.0, 1.1),
            invasive: ClassTexture::grid(4.0, 0.6, 1.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub seed: u64,
    /// Finest level is square with this edge.
    pub finest_dim: usize,
    pub levels: usize,
    pub zoom_rate: usize,
    pub tile_size: usize,
    /// Fraction of the slide covered by tissue (the rest is glass).
    pub tissue_fraction: f64,
    /// Area share of the whole slide per abnormal class:
    /// [benign, in_situ, invasive].
    pub class_fractions: [f64; 3],
    /// Annotation boundary jitter amplitude, finest-level pixels.
    pub label_jitter_px: f64,
    pub texture: TextureParams,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 7,
            finest_dim: 4096,
            levels: 3,
            zoom_rate: 2,
            tile_size: 256,
            tissue_fraction: 0.45,
            class_fractions: [0.06, 0.055, 0.055],
            label_jitter_px: 2.0,
            texture: TextureParams::default(),
        }
    }
}

impl SynthSpec {
    pub fn class_names() -> Vec<String> {
        ["normal", "benign", "in_situ", "invasive"]
            .into_iter()
            .map(String::from)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(SynthError::BadSpec(msg));
        if self.levels < 1 {
            return fail("levels must be >= 1".into());
        }
        if self.zoom_rate < 2 {
            return fail(format!("zoom rate must be >= 2, got {}", self.zoom_rate));
        }
        if self.tile_size < 8 {
            return fail(format!("tile size {} too small", self.tile_size));
        }
        let down = self.zoom_rate.pow(self.levels as u32 - 1);
        if self.finest_dim % down != 0 {
            return fail(format!(
                "finest dim {} is not divisible by rate^(levels-1) = {down}",
                self.finest_dim
            ));
        }
        let coarsest = self.finest_dim / down;
        if coarsest % self.tile_size != 0 {
            return fail(format!(
                "coarsest dim {coarsest} is not divisible by tile size {}",
                self.tile_size
            ));
        }
        if !(0.0..=0.9).contains(&self.tissue_fraction) {
            return fail(format!(
                "tissue fraction {} outside [0, 0.9]",
                self.tissue_fraction
            ));
        }
        let roi: f64 = self.class_fractions.iter().sum();
        if roi > self.tissue_fraction {
            return fail(format!(
                "class fractions sum {roi} exceeds tissue fraction {}",
                self.tissue_fraction
            ));
        }
        if self.class_fractions.iter().any(|&f| f < 0.0) {
            return fail("class fractions must be non-negative".into());
        }
        if self.label_jitter_px < 0.0 || self.label_jitter_px > 16.0 {
            return fail(format!(
                "label jitter {} outside [0, 16]",
                self.label_jitter_px
            ));
        }
        Ok(())
    }

    pub fn level_dim(&self, level: usize) -> usize {
        let down = self.zoom_rate.pow((self.levels - 1 - level) as u32);
        self.finest_dim / down
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spec_is_valid() {
        SynthSpec::default().validate().unwrap();
    }

    #[test]
    fn indivisible_dims_are_rejected() {
        let spec = SynthSpec {
            finest_dim: 1000,
            ..SynthSpec::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn oversubscribed_classes_are_rejected() {
        let spec = SynthSpec {
            class_fractions: [0.3, 0.2, 0.2],
            tissue_fraction: 0.4,
            ..SynthSpec::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn level_dims_scale_by_rate() {
        let spec = SynthSpec::default();
        assert_eq!(spec.level_dim(0), 1024);
        assert_eq!(spec.level_dim(1), 2048);
        assert_eq!(spec.level_dim(2), 4096);
    }
}
