//! Dataset synthesis. The finest level is rendered from the analytic model;
//! each coarser level is the exact box mean of its finer level (images) and
//! the majority-vote downsample (labels), so the construction invariant
//! "coarse labels equal the downsampled fine labels" holds by definition.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use razn_pyramid::{label_downsample, tiles, IntMask, Manifest, PyramidDataset, MANIFEST_FILE};

use crate::error::{Result, SynthError};
use crate::model::RegionModel;
use crate::spec::SynthSpec;
use crate::texture::render_finest_tile;

fn io_err(path: &Path, source: std::io::Error) -> SynthError {
    SynthError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// True when the directory already holds a dataset (or anything at all).
pub fn output_occupied(out_dir: &Path) -> bool {
    out_dir.join(MANIFEST_FILE).exists()
        || fs::read_dir(out_dir)
            .map(|mut d| d.next().is_some())
            .unwrap_or(false)
}

pub fn generate(spec: &SynthSpec, out_dir: &Path) -> Result<PyramidDataset> {
    spec.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    if output_occupied(out_dir) {
        return Err(SynthError::AlreadyExists(out_dir.display().to_string()));
    }

    let manifest = Manifest {
        zoom_rate: spec.zoom_rate,
        tile_size: spec.tile_size,
        classes: SynthSpec::class_names(),
        seed: spec.seed,
        level_dims: (0..spec.levels)
            .map(|l| (spec.level_dim(l), spec.level_dim(l)))
            .collect(),
    };
    manifest.write_to(out_dir)?;
    for level in 0..spec.levels {
        let dir = tiles::level_dir(out_dir, level);
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    }

    let model = RegionModel::build(spec);
    let ts = spec.tile_size;
    let finest = spec.levels - 1;
    let finest_tiles = spec.level_dim(finest) / ts;

    // finest level from the analytic model, tile-parallel
    let coords: Vec<(usize, usize)> = (0..finest_tiles)
        .flat_map(|tr| (0..finest_tiles).map(move |tc| (tr, tc)))
        .collect();
    coords.par_iter().try_for_each(|&(tr, tc)| -> Result<()> {
        let tile = render_finest_tile(spec, &model, tr, tc);
        tiles::write_image_tile(out_dir, finest, tr, tc, ts, &tile.rgb)?;
        tiles::write_label_tile(out_dir, finest, tr, tc, ts, &tile.labels)?;
        Ok(())
    })?;

    // coarser levels by exact reduction of the level below
    for level in (0..finest).rev() {
        let level_tiles = spec.level_dim(level) / ts;
        let rate = spec.zoom_rate;
        let coords: Vec<(usize, usize)> = (0..level_tiles)
            .flat_map(|tr| (0..level_tiles).map(move |tc| (tr, tc)))
            .collect();
        coords.par_iter().try_for_each(|&(tr, tc)| -> Result<()> {
            let fine_extent = ts * rate;
            let mut fine_rgb = vec![0u8; fine_extent * fine_extent * 3];
            let mut fine_lab = vec![0u8; fine_extent * fine_extent];
            for br in 0..rate {
                for bc in 0..rate {
                    let child_rgb =
                        tiles::read_image_tile(out_dir, level + 1, tr * rate + br, tc * rate + bc, ts)?;
                    let child_lab = tiles::read_label_tile(
                        out_dir,
                        level + 1,
                        tr * rate + br,
                        tc * rate + bc,
                        ts,
                        4,
                    )?;
                    for r in 0..ts {
                        let dst = (br * ts + r) * fine_extent + bc * ts;
                        fine_lab[dst..dst + ts]
                            .copy_from_slice(&child_lab[r * ts..(r + 1) * ts]);
                        let dst3 = dst * 3;
                        fine_rgb[dst3..dst3 + ts * 3]
                            .copy_from_slice(&child_rgb[r * ts * 3..(r + 1) * ts * 3]);
                    }
                }
            }

            // box mean with round-half-up, exact integer arithmetic
            let mut rgb = vec![0u8; ts * ts * 3];
            let norm = (rate * rate) as u32;
            for r in 0..ts {
                for c in 0..ts {
                    for ch in 0..3 {
                        let mut sum = 0u32;
                        for br in 0..rate {
                            for bc in 0..rate {
                                sum += fine_rgb
                                    [((r * rate + br) * fine_extent + c * rate + bc) * 3 + ch]
                                    as u32;
                            }
                        }
                        rgb[(r * ts + c) * 3 + ch] = ((sum + norm / 2) / norm) as u8;
                    }
                }
            }
            let fine_mask = IntMask::new(fine_extent, fine_extent, fine_lab);
            let labels = label_downsample(&fine_mask, rate)?;

            tiles::write_image_tile(out_dir, level, tr, tc, ts, &rgb)?;
            tiles::write_label_tile(out_dir, level, tr, tc, ts, &labels.data)?;
            Ok(())
        })?;
    }

    Ok(PyramidDataset::open(out_dir)?)
}
