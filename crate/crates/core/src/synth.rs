//! Seeded synthetic datasets with spatially smooth score maps.
//!
//! Backgrounds are white noise smoothed by repeated box blurs and scaled to
//! zero mean and unit variance. Anomalous images carry a few elliptic
//! regions; each region raises the scores under (a blurred copy of) its
//! footprint by its own random strength, so detection quality varies from
//! region to region and image to image.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{Dataset, GtMask, Sample, ScoreMap};
use crate::error::Result;

/// One box-blur pass along rows then columns, borders clamped.
fn box_blur(values: &mut [f64], height: usize, width: usize, radius: usize) {
    if radius == 0 {
        return;
    }
    let mut line = Vec::new();
    let mut prefix = Vec::new();
    let mut blur_line = |get: &mut dyn FnMut(usize) -> f64, len: usize, out: &mut dyn FnMut(usize, f64)| {
        line.clear();
        line.extend((0..len).map(&mut *get));
        prefix.clear();
        prefix.push(0.0);
        let mut acc = 0.0;
        for &v in &line {
            acc += v;
            prefix.push(acc);
        }
        for i in 0..len {
            let lo = i.saturating_sub(radius);
            let hi = (i + radius).min(len - 1);
            out(i, (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64);
        }
    };
    let mut tmp = values.to_vec();
    for r in 0..height {
        let row = &values[r * width..(r + 1) * width];
        let dst = &mut tmp[r * width..(r + 1) * width];
        blur_line(&mut |i| row[i], width, &mut |i, v| dst[i] = v);
    }
    for c in 0..width {
        blur_line(&mut |i| tmp[i * width + c], height, &mut |i, v| values[i * width + c] = v);
    }
}

/// Smoothed white noise with zero mean and unit variance.
pub fn smooth_field(height: usize, width: usize, radius: usize, passes: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..height * width).map(|_| rng.random::<f64>() - 0.5).collect();
    for _ in 0..passes {
        box_blur(&mut v, height, width, radius);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let std = if std > 0.0 { std } else { 1.0 };
    v.iter_mut().for_each(|x| *x = (*x - mean) / std);
    v
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub height: usize,
    pub width: usize,
    pub num_normal: usize,
    pub num_anomalous: usize,
    /// Box-blur radius of the background, in pixels.
    pub smooth_radius: usize,
    pub smooth_passes: usize,
    /// Regions per anomalous image, inclusive range.
    pub regions: (usize, usize),
    /// Ellipse semi-axis range as a fraction of the shorter image side.
    pub region_scale: (f64, f64),
    /// Range of the per-region score boost, in background standard deviations.
    pub strength: (f64, f64),
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            height: 128,
            width: 128,
            num_normal: 8,
            num_anomalous: 8,
            smooth_radius: 4,
            smooth_passes: 3,
            regions: (1, 3),
            region_scale: (0.04, 0.15),
            strength: (0.5, 6.0),
            seed: 0,
        }
    }
}

fn ellipse_mask(height: usize, width: usize, cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let side = height.min(width) as f64;
    let count = rng.random_range(cfg.regions.0..=cfg.regions.1);
    let mut taken = vec![false; height * width];
    let mut regions = Vec::with_capacity(count);
    for _ in 0..count {
        let a = (rng.random_range(cfg.region_scale.0..=cfg.region_scale.1) * side).max(1.0);
        let b = (rng.random_range(cfg.region_scale.0..=cfg.region_scale.1) * side).max(1.0);
        let cy = rng.random_range(0.0..height as f64);
        let cx = rng.random_range(0.0..width as f64);
        let theta = rng.random_range(0.0..std::f64::consts::PI);
        let (s, c) = theta.sin_cos();
        let reach = a.max(b).ceil() as isize;
        let mut pixels = Vec::new();
        for y in (cy as isize - reach).max(0)..=(cy as isize + reach).min(height as isize - 1) {
            for x in (cx as isize - reach).max(0)..=(cx as isize + reach).min(width as isize - 1) {
                let (dy, dx) = (y as f64 + 0.5 - cy, x as f64 + 0.5 - cx);
                let u = dx * c + dy * s;
                let v = -dx * s + dy * c;
                let p = y as usize * width + x as usize;
                if (u / a).powi(2) + (v / b).powi(2) <= 1.0 && !taken[p] {
                    taken[p] = true;
                    pixels.push(p);
                }
            }
        }
        if !pixels.is_empty() {
            regions.push(pixels);
        }
    }
    if regions.is_empty() {
        let p = rng.random_range(0..height * width);
        regions.push(vec![p]);
    }
    regions
}

fn image_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn synthetic_normal(cfg: &SynthConfig, index: usize) -> Result<Sample> {
    let mut rng = image_rng(cfg.seed, index);
    let id = format!("good/{index:04}");
    let field = smooth_field(cfg.height, cfg.width, cfg.smooth_radius, cfg.smooth_passes, &mut rng);
    Sample::new(
        id.clone(),
        ScoreMap::new(&id, cfg.height, cfg.width, field)?,
        GtMask::zeros(cfg.height, cfg.width),
    )
}

pub fn synthetic_anomalous(cfg: &SynthConfig, index: usize) -> Result<Sample> {
    let (h, w) = (cfg.height, cfg.width);
    let mut rng = image_rng(cfg.seed, index);
    let id = format!("defect/{index:04}");
    let mut scores = smooth_field(h, w, cfg.smooth_radius, cfg.smooth_passes, &mut rng);
    let regions = ellipse_mask(h, w, cfg, &mut rng);
    let mut boost = vec![0.0; h * w];
    let mut mask = vec![0u8; h * w];
    for pixels in &regions {
        let strength = rng.random_range(cfg.strength.0..=cfg.strength.1);
        for &p in pixels {
            boost[p] = strength;
            mask[p] = 1;
        }
    }
    // Soft edges: the boost bleeds slightly outside each region.
    box_blur(&mut boost, h, w, (cfg.smooth_radius / 2).max(1));
    scores.iter_mut().zip(&boost).for_each(|(s, b)| *s += b);
    Sample::new(id.clone(), ScoreMap::new(&id, h, w, scores)?, GtMask::new(&id, h, w, mask)?)
}

/// Normal images first, then anomalous ones; deterministic in `cfg.seed`.
pub fn synthetic_dataset(cfg: &SynthConfig) -> Result<Dataset> {
    let n = cfg.num_normal;
    let samples = (0..n + cfg.num_anomalous)
        .into_par_iter()
        .map(|i| {
            if i < n {
                synthetic_normal(cfg, i)
            } else {
                synthetic_anomalous(cfg, i)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(samples)
}
