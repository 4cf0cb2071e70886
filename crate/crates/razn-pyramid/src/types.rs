//! Patch addressing and label masks.
//!
//! Levels are numbered from the coarsest (0); level l+1 doubles (or r-times)
//! the extent of level l. Coordinates are (row, col) from the top-left and
//! windows are half-open [origin, origin + extent).

use crate::error::{PyramidError, Result};

/// An addressable window within one pyramid level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PatchRef {
    pub level: usize,
    pub row: usize,
    pub col: usize,
    pub h: usize,
    pub w: usize,
}

impl PatchRef {
    pub fn new(level: usize, row: usize, col: usize, h: usize, w: usize) -> Self {
        PatchRef { level, row, col, h, w }
    }

    pub fn area(&self) -> usize {
        self.h * self.w
    }

    /// True when the two windows are on the same level and share pixels.
    pub fn overlaps(&self, other: &PatchRef) -> bool {
        self.level == other.level
            && self.row < other.row + other.h
            && other.row < self.row + self.h
            && self.col < other.col + other.w
            && other.col < self.col + self.w
    }
}

/// The r*r children of a zoomed window, row-major.
#[derive(Debug, Clone)]
pub struct PatchGrid {
    pub parent: PatchRef,
    pub rate: usize,
    pub children: Vec<PatchRef>,
}

/// Single-channel class-index raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMask {
    pub h: usize,
    pub w: usize,
    pub data: Vec<u8>,
}

impl IntMask {
    pub fn new(h: usize, w: usize, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), h * w, "mask data does not match extent");
        IntMask { h, w, data }
    }

    pub fn filled(h: usize, w: usize, value: u8) -> Self {
        IntMask {
            h,
            w,
            data: vec![value; h * w],
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> u8 {
        self.data[r * self.w + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u8) {
        self.data[r * self.w + c] = v;
    }

    pub fn counts(&self, classes: usize) -> Vec<u64> {
        let mut counts = vec![0u64; classes];
        for &v in &self.data {
            counts[v as usize] += 1;
        }
        counts
    }

    pub fn window(&self, row: usize, col: usize, h: usize, w: usize) -> Result<IntMask> {
        if row + h > self.h || col + w > self.w {
            return Err(PyramidError::OutOfBounds {
                patch: PatchRef::new(0, row, col, h, w),
                level_h: self.h,
                level_w: self.w,
            });
        }
        let mut data = Vec::with_capacity(h * w);
        for r in 0..h {
            let base = (row + r) * self.w + col;
            data.extend_from_slice(&self.data[base..base + w]);
        }
        Ok(IntMask::new(h, w, data))
    }
}
