//! Heatmap overlays tied to the AUPIMO threshold bounds.
//!
//! Scores below `t_lower` are transparent. Scores in `[t_lower, t_upper)` get
//! a blue ramp and scores `>= t_upper` a red ramp up to the image maximum;
//! both ramps darken as the score grows. The ground-truth regions get a
//! white contour two pixels wide just outside the mask.

use std::path::Path;

use image::{ImageFormat, Rgba, RgbaImage};

use crate::data::{GtMask, Sample};
use crate::error::Result;
use crate::io::raster::image_error;

pub const TRANSPARENT: Rgba<u8> = Rgba([0, 0, 0, 0]);
pub const CONTOUR: Rgba<u8> = Rgba([255, 255, 255, 255]);
pub const BLUE_LIGHT: [u8; 3] = [173, 216, 255];
pub const BLUE_DARK: [u8; 3] = [0, 0, 139];
pub const RED_LIGHT: [u8; 3] = [255, 170, 170];
pub const RED_DARK: [u8; 3] = [139, 0, 0];

/// Contour width in pixels.
pub const CONTOUR_WIDTH: usize = 2;

fn lerp(from: [u8; 3], to: [u8; 3], frac: f64) -> Rgba<u8> {
    let f = frac.clamp(0.0, 1.0);
    let ch = |i: usize| (from[i] as f64 + (to[i] as f64 - from[i] as f64) * f).round() as u8;
    Rgba([ch(0), ch(1), ch(2), 255])
}

/// Color of a single score. `max` is the image's maximum score.
pub fn heat_color(score: f64, t_lower: f64, t_upper: f64, max: f64) -> Rgba<u8> {
    if score < t_lower {
        TRANSPARENT
    } else if score < t_upper {
        lerp(BLUE_LIGHT, BLUE_DARK, (score - t_lower) / (t_upper - t_lower))
    } else {
        let span = max - t_upper;
        let frac = if span > 0.0 { (score - t_upper) / span } else { 1.0 };
        lerp(RED_LIGHT, RED_DARK, frac)
    }
}

/// Pixels within `CONTOUR_WIDTH` (chessboard distance) of the mask but not in it.
pub fn outer_contour(mask: &GtMask) -> Vec<bool> {
    let (h, w) = (mask.height(), mask.width());
    let v = mask.values();
    let r = CONTOUR_WIDTH;
    // Separable square dilation: rows then columns.
    let mut horiz = vec![false; h * w];
    for y in 0..h {
        for x in 0..w {
            let lo = x.saturating_sub(r);
            let hi = (x + r).min(w - 1);
            horiz[y * w + x] = (lo..=hi).any(|xx| v[y * w + xx] != 0);
        }
    }
    let mut out = vec![false; h * w];
    for y in 0..h {
        let lo = y.saturating_sub(r);
        let hi = (y + r).min(h - 1);
        for x in 0..w {
            out[y * w + x] = v[y * w + x] == 0 && (lo..=hi).any(|yy| horiz[yy * w + x]);
        }
    }
    out
}

pub fn render_heatmap(sample: &Sample, t_lower: f64, t_upper: f64) -> RgbaImage {
    assert!(t_lower <= t_upper, "threshold bounds out of order");
    let (h, w) = (sample.height(), sample.width());
    let scores = sample.scores().values();
    let (_, max) = sample.scores().min_max();
    let contour = outer_contour(sample.mask());
    RgbaImage::from_fn(w as u32, h as u32, |x, y| {
        let i = y as usize * w + x as usize;
        if contour[i] {
            CONTOUR
        } else {
            heat_color(scores[i], t_lower, t_upper, max)
        }
    })
}

pub fn save_heatmap_png(path: &Path, img: &RgbaImage) -> Result<()> {
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|e| image_error(path, e))
}
