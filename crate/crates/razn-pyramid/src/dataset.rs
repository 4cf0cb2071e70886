//! Read access to a pyramid on disk. The dataset itself is immutable after
//! open; each worker owns its own `PatchReader` (and tile cache), so
//! concurrent reads need no locks.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use razn_autodiff::Tensor;

use crate::error::{PyramidError, Result};
use crate::manifest::Manifest;
use crate::tiles;
use crate::types::{IntMask, PatchRef};

#[derive(Debug, Clone)]
pub struct PyramidDataset {
    root: PathBuf,
    manifest: Manifest,
}

impl PyramidDataset {
    pub fn open(root: &Path) -> Result<Self> {
        let manifest = Manifest::read_from(root)?;
        for level in 0..manifest.levels() {
            let dir = tiles::level_dir(root, level);
            if !dir.is_dir() {
                return Err(PyramidError::Manifest(format!(
                    "missing level directory {}",
                    dir.display()
                )));
            }
        }
        Ok(PyramidDataset {
            root: root.to_path_buf(),
            manifest,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn levels(&self) -> usize {
        self.manifest.levels()
    }

    pub fn zoom_rate(&self) -> usize {
        self.manifest.zoom_rate
    }

    pub fn tile_size(&self) -> usize {
        self.manifest.tile_size
    }

    pub fn num_classes(&self) -> usize {
        self.manifest.classes.len()
    }

    pub fn level_dims(&self, level: usize) -> (usize, usize) {
        self.manifest.level_dims[level]
    }

    pub fn check_ref(&self, patch: &PatchRef) -> Result<()> {
        if patch.level >= self.levels() {
            return Err(PyramidError::MaxMagnification {
                level: patch.level,
                levels: self.levels(),
            });
        }
        let (lh, lw) = self.level_dims(patch.level);
        if patch.h == 0
            || patch.w == 0
            || patch.row + patch.h > lh
            || patch.col + patch.w > lw
        {
            return Err(PyramidError::OutOfBounds {
                patch: *patch,
                level_h: lh,
                level_w: lw,
            });
        }
        Ok(())
    }

    pub fn zoom_region(&self, patch: &PatchRef) -> Result<PatchRef> {
        self.check_ref(patch)?;
        crate::geometry::zoom_region(self.levels(), self.zoom_rate(), patch)
    }

    pub fn reader(&self) -> PatchReader<'_> {
        PatchReader::new(self)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum TileKind {
    Image,
    Label,
}

/// Per-worker window reader with a small FIFO tile cache.
pub struct PatchReader<'a> {
    ds: &'a PyramidDataset,
    cache: HashMap<(TileKind, usize, usize, usize), Vec<u8>>,
    order: Vec<(TileKind, usize, usize, usize)>,
    capacity: usize,
}

impl<'a> PatchReader<'a> {
    pub fn new(ds: &'a PyramidDataset) -> Self {
        PatchReader {
            ds,
            cache: HashMap::new(),
            order: Vec::new(),
            capacity: 96,
        }
    }

    pub fn dataset(&self) -> &PyramidDataset {
        self.ds
    }

    fn tile(&mut self, kind: TileKind, level: usize, tr: usize, tc: usize) -> Result<&Vec<u8>> {
        let key = (kind, level, tr, tc);
        if !self.cache.contains_key(&key) {
            let size = self.ds.tile_size();
            let data = match kind {
                TileKind::Image => tiles::read_image_tile(&self.ds.root, level, tr, tc, size)?,
                TileKind::Label => {
                    tiles::read_label_tile(&self.ds.root, level, tr, tc, size, self.ds.num_classes())?
                }
            };
            if self.order.len() >= self.capacity {
                let evict = self.order.remove(0);
                self.cache.remove(&evict);
            }
            self.cache.insert(key, data);
            self.order.push(key);
        }
        Ok(self.cache.get(&key).expect("tile just inserted"))
    }

    /// Copies the window into a channel-planar [3,H,W] tensor scaled to
    /// [0,1]. Pixel-exact: repeated reads return identical data.
    pub fn read_image(&mut self, patch: &PatchRef) -> Result<Tensor<f32>> {
        self.ds.check_ref(patch)?;
        let ts = self.ds.tile_size();
        let mut out = Tensor::<f32>::zeros(&[3, patch.h, patch.w]);
        let plane = patch.h * patch.w;
        for r in 0..patch.h {
            let abs_r = patch.row + r;
            let (tr, in_r) = (abs_r / ts, abs_r % ts);
            let mut c = 0;
            while c < patch.w {
                let abs_c = patch.col + c;
                let (tc, in_c) = (abs_c / ts, abs_c % ts);
                let run = (ts - in_c).min(patch.w - c);
                let tile = self.tile(TileKind::Image, patch.level, tr, tc)?;
                for i in 0..run {
                    let src = (in_r * ts + in_c + i) * 3;
                    let dst = r * patch.w + c + i;
                    out.data_mut()[dst] = tile[src] as f32 / 255.0;
                    out.data_mut()[plane + dst] = tile[src + 1] as f32 / 255.0;
                    out.data_mut()[2 * plane + dst] = tile[src + 2] as f32 / 255.0;
                }
                c += run;
            }
        }
        Ok(out)
    }

    pub fn read_labels(&mut self, patch: &PatchRef) -> Result<IntMask> {
        self.ds.check_ref(patch)?;
        let ts = self.ds.tile_size();
        let mut out = IntMask::filled(patch.h, patch.w, 0);
        for r in 0..patch.h {
            let abs_r = patch.row + r;
            let (tr, in_r) = (abs_r / ts, abs_r % ts);
            let mut c = 0;
            while c < patch.w {
                let abs_c = patch.col + c;
                let (tc, in_c) = (abs_c / ts, abs_c % ts);
                let run = (ts - in_c).min(patch.w - c);
                let tile = self.tile(TileKind::Label, patch.level, tr, tc)?;
                let dst = r * patch.w + c;
                out.data[dst..dst + run]
                    .copy_from_slice(&tile[in_r * ts + in_c..in_r * ts + in_c + run]);
                c += run;
            }
        }
        Ok(out)
    }

    /// The window's image and labels together.
    pub fn read_patch(&mut self, patch: &PatchRef) -> Result<(Tensor<f32>, IntMask)> {
        Ok((self.read_image(patch)?, self.read_labels(patch)?))
    }
}
