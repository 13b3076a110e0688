//! Score-map and mask loading, and score-map resizing.
//!
//! Score maps are NPY files; masks are 8-bit grayscale PNG or PGM images
//! where any nonzero value marks an anomalous pixel. Nothing is ever cropped.

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat, ImageReader};

use super::npy::read_npy;
use crate::data::{GtMask, ScoreMap};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RasterKind {
    ScoreMap,
    Mask,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Raster {
    ScoreMap(ScoreMap),
    Mask(GtMask),
}

pub fn load_raster(path: &Path, kind: RasterKind) -> Result<Raster> {
    let id = path.display().to_string();
    Ok(match kind {
        RasterKind::ScoreMap => Raster::ScoreMap(load_score_map(path, &id)?),
        RasterKind::Mask => Raster::Mask(load_mask(path, &id)?),
    })
}

pub fn load_score_map(path: &Path, id: &str) -> Result<ScoreMap> {
    let arr = read_npy(path)?;
    ScoreMap::new(id, arr.height, arr.width, arr.values)
}

pub(crate) fn image_error(path: &Path, err: image::ImageError) -> Error {
    match err {
        image::ImageError::IoError(e) => Error::io(path, e),
        image::ImageError::Unsupported(e) => Error::UnsupportedFormat(e.to_string()),
        other => Error::CorruptHeader(format!("{}: {other}", path.display())),
    }
}

pub fn load_mask(path: &Path, id: &str) -> Result<GtMask> {
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    match reader.format() {
        Some(ImageFormat::Png | ImageFormat::Pnm) => {}
        Some(other) => return Err(Error::UnsupportedFormat(format!("{other:?} mask"))),
        None => return Err(Error::UnsupportedFormat(format!("{}: unknown image format", path.display()))),
    }
    let DynamicImage::ImageLuma8(gray) = reader.decode().map_err(|e| image_error(path, e))? else {
        return Err(Error::NonGrayscaleMask {
            path: path.to_owned(),
        });
    };
    let (w, h) = gray.dimensions();
    let values = gray.into_raw().into_iter().map(|v| (v != 0) as u8).collect();
    GtMask::new(id, h as usize, w as usize, values)
}

/// Writes a mask as an 8-bit PNG with anomalous pixels at 255.
pub fn save_mask_png(path: &Path, mask: &GtMask) -> Result<()> {
    let img = GrayImage::from_raw(
        mask.width() as u32,
        mask.height() as u32,
        mask.values().iter().map(|&v| v * 255).collect(),
    )
    .expect("buffer matches dimensions");
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|e| image_error(path, e))
}

/// Source coordinate and blend weight along one axis, half-pixel centers.
fn axis_taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let x = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let x0 = x.floor() as usize;
            let x1 = (x0 + 1).min(src - 1);
            (x0, x1, x - x0 as f64)
        })
        .collect()
}

/// Bilinear resize with half-pixel centers (`align_corners = false`);
/// samples outside the source grid are clamped to the border.
pub fn resize_scores(map: &ScoreMap, height: usize, width: usize) -> ScoreMap {
    assert!(height >= 1 && width >= 1, "target size must be at least 1x1");
    if (height, width) == (map.height(), map.width()) {
        return map.clone();
    }
    let rows = axis_taps(map.height(), height);
    let cols = axis_taps(map.width(), width);
    let src = map.values();
    let sw = map.width();
    let mut values = Vec::with_capacity(height * width);
    for &(r0, r1, fy) in &rows {
        for &(c0, c1, fx) in &cols {
            let top = src[r0 * sw + c0] * (1.0 - fx) + src[r0 * sw + c1] * fx;
            let bottom = src[r1 * sw + c0] * (1.0 - fx) + src[r1 * sw + c1] * fx;
            values.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    ScoreMap::new("resized", height, width, values).expect("interpolated values are finite")
}
