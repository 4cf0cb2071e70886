//! Aligned-grid patch sampling over the coarsest level, with a fixed
//! train/eval split and class-stratified oversampling of patches that
//! contain any abnormal pixel.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use razn_pyramid::{PatchRef, PyramidDataset};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Eval,
    All,
}

impl Split {
    pub fn parse(s: &str) -> Option<Split> {
        match s {
            "train" => Some(Split::Train),
            "eval" => Some(Split::Eval),
            "all" => Some(Split::All),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridSampler {
    patch_size: usize,
    train: Vec<PatchRef>,
    train_abnormal: Vec<usize>,
    eval: Vec<PatchRef>,
    /// Probability of drawing from the abnormal pool.
    pub oversample_abnormal: f64,
}

fn position_hash(row: usize, col: usize) -> u64 {
    let mut z = (row as u64) << 32 | col as u64;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

impl GridSampler {
    /// Builds the non-overlapping patch grid at level 0 and classifies each
    /// position by its labels. Every 1-in-`eval_modulus` position (by
    /// position hash) goes to the eval split.
    pub fn build(
        ds: &PyramidDataset,
        patch_size: usize,
        eval_modulus: u64,
        oversample_abnormal: f64,
    ) -> Result<GridSampler> {
        let (lh, lw) = ds.level_dims(0);
        if patch_size == 0 || patch_size > lh || patch_size > lw {
            return Err(CoreError::EmptySampler(format!(
                "patch size {patch_size} does not fit level 0 ({lh}x{lw})"
            )));
        }
        let mut reader = ds.reader();
        let mut train = Vec::new();
        let mut train_abnormal = Vec::new();
        let mut eval = Vec::new();
        for row in 0..lh / patch_size {
            for col in 0..lw / patch_size {
                let patch = PatchRef::new(0, row * patch_size, col * patch_size, patch_size, patch_size);
                let labels = reader.read_labels(&patch)?;
                let abnormal = labels.data.iter().any(|&v| v != 0);
                if eval_modulus > 0 && position_hash(row, col) % eval_modulus == 0 {
                    eval.push(patch);
                } else {
                    if abnormal {
                        train_abnormal.push(train.len());
                    }
                    train.push(patch);
                }
            }
        }
        if train.is_empty() {
            return Err(CoreError::EmptySampler("no training patches".into()));
        }
        Ok(GridSampler {
            patch_size,
            train,
            train_abnormal,
            eval,
            oversample_abnormal,
        })
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn train_refs(&self) -> &[PatchRef] {
        &self.train
    }

    pub fn eval_refs(&self) -> &[PatchRef] {
        &self.eval
    }

    pub fn refs_for(&self, split: Split) -> Vec<PatchRef> {
        match split {
            Split::Train => self.train.clone(),
            Split::Eval => self.eval.clone(),
            Split::All => {
                let mut all = self.train.clone();
                all.extend_from_slice(&self.eval);
                all
            }
        }
    }

    pub fn abnormal_train_count(&self) -> usize {
        self.train_abnormal.len()
    }

    /// One stratified draw. Always consumes exactly two rng values so the
    /// stream position is independent of pool contents.
    pub fn draw(&self, rng: &mut ChaCha8Rng) -> PatchRef {
        let take_abnormal: f64 = rng.random();
        let pick: u64 = rng.random();
        if take_abnormal < self.oversample_abnormal && !self.train_abnormal.is_empty() {
            let idx = self.train_abnormal[(pick % self.train_abnormal.len() as u64) as usize];
            self.train[idx]
        } else {
            self.train[(pick % self.train.len() as u64) as usize]
        }
    }

    pub fn draw_batch(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<PatchRef> {
        (0..n).map(|_| self.draw(rng)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_parse() {
        assert_eq!(Split::parse("train"), Some(Split::Train));
        assert_eq!(Split::parse("eval"), Some(Split::Eval));
        assert_eq!(Split::parse("all"), Some(Split::All));
        assert_eq!(Split::parse("x"), None);
    }
}
