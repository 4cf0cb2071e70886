//! Lossless tile rasters: 8-bit RGB images and single-channel index masks,
//! one PNG pair per tile.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use crate::error::{io_err, PyramidError, Result};

pub fn level_dir(root: &Path, level: usize) -> PathBuf {
    root.join(format!("level_{level}"))
}

pub fn image_tile_path(root: &Path, level: usize, tile_row: usize, tile_col: usize) -> PathBuf {
    level_dir(root, level).join(format!("img_{tile_row}_{tile_col}.png"))
}

pub fn label_tile_path(root: &Path, level: usize, tile_row: usize, tile_col: usize) -> PathBuf {
    level_dir(root, level).join(format!("lab_{tile_row}_{tile_col}.png"))
}

fn png_err(path: &Path, e: impl std::fmt::Display) -> PyramidError {
    PyramidError::Png {
        path: path.display().to_string(),
        detail: e.to_string(),
    }
}

fn write_png(path: &Path, size: usize, color: png::ColorType, data: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), size as u32, size as u32);
    encoder.set_color(color);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header().map_err(|e| png_err(path, e))?;
    writer.write_image_data(data).map_err(|e| png_err(path, e))?;
    Ok(())
}

fn read_png(path: &Path, size: usize, color: png::ColorType) -> Result<Vec<u8>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let mut reader = decoder.read_info().map_err(|e| png_err(path, e))?;
    let mut buf = vec![0u8; reader.output_buffer_size().ok_or_else(|| {
        png_err(path, "output buffer size overflow")
    })?];
    let info = reader.next_frame(&mut buf).map_err(|e| png_err(path, e))?;
    if info.width as usize != size
        || info.height as usize != size
        || info.color_type != color
        || info.bit_depth != png::BitDepth::Eight
    {
        return Err(PyramidError::CorruptTile {
            path: path.display().to_string(),
            detail: format!(
                "expected {size}x{size} {color:?}/8, got {}x{} {:?}/{:?}",
                info.width, info.height, info.color_type, info.bit_depth
            ),
        });
    }
    buf.truncate(info.buffer_size());
    Ok(buf)
}

pub fn write_image_tile(
    root: &Path,
    level: usize,
    tile_row: usize,
    tile_col: usize,
    size: usize,
    rgb: &[u8],
) -> Result<()> {
    assert_eq!(rgb.len(), size * size * 3, "rgb tile payload size");
    write_png(
        &image_tile_path(root, level, tile_row, tile_col),
        size,
        png::ColorType::Rgb,
        rgb,
    )
}

pub fn write_label_tile(
    root: &Path,
    level: usize,
    tile_row: usize,
    tile_col: usize,
    size: usize,
    labels: &[u8],
) -> Result<()> {
    assert_eq!(labels.len(), size * size, "label tile payload size");
    write_png(
        &label_tile_path(root, level, tile_row, tile_col),
        size,
        png::ColorType::Grayscale,
        labels,
    )
}

pub fn read_image_tile(
    root: &Path,
    level: usize,
    tile_row: usize,
    tile_col: usize,
    size: usize,
) -> Result<Vec<u8>> {
    read_png(
        &image_tile_path(root, level, tile_row, tile_col),
        size,
        png::ColorType::Rgb,
    )
}

pub fn read_label_tile(
    root: &Path,
    level: usize,
    tile_row: usize,
    tile_col: usize,
    size: usize,
    classes: usize,
) -> Result<Vec<u8>> {
    let path = label_tile_path(root, level, tile_row, tile_col);
    let data = read_png(&path, size, png::ColorType::Grayscale)?;
    if let Some(&bad) = data.iter().find(|&&v| v as usize >= classes) {
        return Err(PyramidError::BadLabel {
            value: bad,
            path: path.display().to_string(),
            classes,
        });
    }
    Ok(data)
}
