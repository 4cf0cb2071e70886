//! Multi-resolution tiled image+label pyramids: on-disk layout, manifest,
//! pixel-exact window reads, zoom addressing, grid cropping/stitching and
//! label downsampling.
//!
//! Levels are numbered from the coarsest (level 0); each level above it
//! scales both extents by the zoom rate. Storage is tiled so large pyramids
//! are never loaded whole.

#![forbid(unsafe_code)]

mod dataset;
mod error;
mod geometry;
mod manifest;
pub mod tiles;
mod types;

pub use dataset::{PatchReader, PyramidDataset};
pub use error::{PyramidError, Result};
pub use geometry::{crop_grid, label_downsample, replicate, stitch, zoom_region};
pub use manifest::{Manifest, MANIFEST_FILE, MANIFEST_MAGIC};
pub use types::{IntMask, PatchGrid, PatchRef};
