//! Brute-force reference implementations and random dataset generators.
//!
//! Nothing here calls into the library's curve code: counts are recounted
//! pixel by pixel, regions come from a breadth-first flood fill, and areas
//! are integrated with the midpoint rule on each linear piece (exact for a
//! polyline).

#![allow(dead_code)]

use std::collections::VecDeque;

use pimo_core::{Dataset, GtMask, Sample, ScoreMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random small dataset with at least one normal and one anomalous image.
/// About half the datasets draw scores from a coarse set to force ties.
pub fn random_dataset(rng: &mut ChaCha8Rng, max_images: usize, max_side: usize) -> Dataset {
    loop {
        let n = rng.random_range(2..=max_images);
        let coarse = rng.random_bool(0.5);
        let mut samples = Vec::with_capacity(n);
        for i in 0..n {
            let h = rng.random_range(1..=max_side);
            let w = rng.random_range(2..=max_side);
            let anomalous = i == 0 || (i > 1 && rng.random_bool(0.5));
            let density = rng.random_range(0.05..0.6);
            let mut mask: Vec<u8> = (0..h * w)
                .map(|_| (anomalous && rng.random_bool(density)) as u8)
                .collect();
            if anomalous && mask.iter().all(|&m| m == 0) {
                let p = rng.random_range(0..h * w);
                mask[p] = 1;
            }
            let scores: Vec<f64> = mask
                .iter()
                .map(|&m| {
                    let base = if coarse {
                        rng.random_range(0..6) as f64 / 5.0
                    } else {
                        rng.random::<f64>()
                    };
                    base + if m == 1 { rng.random_range(0.0..0.5) } else { 0.0 }
                })
                .collect();
            let id = format!("img{i}");
            samples.push(
                Sample::new(
                    id.clone(),
                    ScoreMap::new(&id, h, w, scores).unwrap(),
                    GtMask::new(&id, h, w, mask).unwrap(),
                )
                .unwrap(),
            );
        }
        let ds = Dataset::new(samples).unwrap();
        let mut all: Vec<f64> = ds.iter().flat_map(|s| s.scores().values().to_vec()).collect();
        all.sort_by(f64::total_cmp);
        all.dedup();
        if all.len() >= 2 && ds.num_normal() > 0 && ds.num_anomalous() > 0 {
            return ds;
        }
    }
}

pub fn unique_scores(ds: &Dataset) -> Vec<f64> {
    let mut all: Vec<f64> = ds.iter().flat_map(|s| s.scores().values().to_vec()).collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}

/// `(tp, fp, n_pos, n_neg)` of one image at threshold `t`, by direct count.
pub fn recount(sample: &Sample, t: f64) -> (u64, u64, u64, u64) {
    let mut out = (0, 0, 0, 0);
    for (&a, &y) in sample.scores().values().iter().zip(sample.mask().values()) {
        let pred = a >= t;
        match (y, pred) {
            (1, true) => out.0 += 1,
            (0, true) => out.1 += 1,
            _ => {}
        }
        if y == 1 {
            out.2 += 1;
        } else {
            out.3 += 1;
        }
    }
    out
}

/// Connected components by breadth-first flood fill.
pub fn flood_fill(mask: &GtMask, eight: bool) -> Vec<Vec<usize>> {
    let (h, w) = (mask.height() as isize, mask.width() as isize);
    let v = mask.values();
    let mut seen = vec![false; v.len()];
    let mut regions = Vec::new();
    for start in 0..v.len() {
        if v[start] == 0 || seen[start] {
            continue;
        }
        let mut region = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(p) = queue.pop_front() {
            region.push(p);
            let (r, c) = (p as isize / w, p as isize % w);
            for dr in -1..=1isize {
                for dc in -1..=1isize {
                    if (dr, dc) == (0, 0) || (!eight && dr != 0 && dc != 0) {
                        continue;
                    }
                    let (nr, nc) = (r + dr, c + dc);
                    if nr < 0 || nc < 0 || nr >= h || nc >= w {
                        continue;
                    }
                    let q = (nr * w + nc) as usize;
                    if v[q] == 1 && !seen[q] {
                        seen[q] = true;
                        queue.push_back(q);
                    }
                }
            }
        }
        region.sort_unstable();
        regions.push(region);
    }
    regions
}

/// Exact area under a polyline over `[lo, hi]`, walking the points in the
/// given order and skipping pieces that do not advance in `x`.
pub fn polyline_area(points: &[(f64, f64)], lo: f64, hi: f64) -> f64 {
    let mut area = 0.0;
    for pair in points.windows(2) {
        let ((x0, y0), (x1, y1)) = (pair[0], pair[1]);
        if x1 <= x0 {
            continue;
        }
        let a = x0.max(lo);
        let b = x1.min(hi);
        if a >= b {
            continue;
        }
        let mid = (a + b) / 2.0;
        let y_mid = y0 + (y1 - y0) * (mid - x0) / (x1 - x0);
        area += (b - a) * y_mid;
    }
    area
}

/// Thresholds from high to low.
fn descending(ds: &Dataset) -> Vec<f64> {
    let mut t = unique_scores(ds);
    t.reverse();
    t
}

/// Pooled `(fpr, tpr)` at `t`.
pub fn set_rates(ds: &Dataset, t: f64) -> (f64, f64) {
    let (mut tp, mut fp, mut np, mut nn) = (0, 0, 0, 0);
    for s in ds.iter() {
        let c = recount(s, t);
        tp += c.0;
        fp += c.1;
        np += c.2;
        nn += c.3;
    }
    (fp as f64 / nn as f64, tp as f64 / np as f64)
}

/// Area under the ROC curve as the Mann-Whitney probability
/// `P(positive > negative) + P(tie) / 2`.
pub fn mann_whitney_auroc(ds: &Dataset) -> f64 {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for s in ds.iter() {
        for (&a, &y) in s.scores().values().iter().zip(s.mask().values()) {
            if y == 1 {
                pos.push(a);
            } else {
                neg.push(a);
            }
        }
    }
    let mut wins = 0.0;
    for &p in &pos {
        for &n in &neg {
            wins += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

pub fn pro_at(ds: &Dataset, t: f64) -> f64 {
    let mut sum = 0.0;
    let mut n = 0;
    for s in ds.iter().filter(|s| !s.is_normal()) {
        let values = s.scores().values();
        for region in flood_fill(s.mask(), true) {
            let hit = region.iter().filter(|&&p| values[p] >= t).count();
            sum += hit as f64 / region.len() as f64;
            n += 1;
        }
    }
    sum / n as f64
}

/// `None` when no threshold reaches a set FPR at or below `max_fpr`.
pub fn aupro_oracle(ds: &Dataset, max_fpr: f64) -> Option<f64> {
    let mut points = vec![(0.0, 0.0)];
    let mut reachable = false;
    for t in descending(ds) {
        let (fpr, _) = set_rates(ds, t);
        reachable |= fpr <= max_fpr;
        points.push((fpr, pro_at(ds, t)));
    }
    points.push((1.0, 1.0));
    reachable.then(|| polyline_area(&points, 0.0, max_fpr) / max_fpr)
}

pub fn shared_fpr_at(ds: &Dataset, t: f64) -> f64 {
    let normals: Vec<&Sample> = ds.iter().filter(|s| s.is_normal()).collect();
    normals
        .iter()
        .map(|s| {
            let c = recount(s, t);
            c.1 as f64 / c.3 as f64
        })
        .sum::<f64>()
        / normals.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleBound {
    Lower,
    Upper,
    Both,
}

/// Per-anomalous-image area of `recall(sample, t)` against ln(shared FPR)
/// over `[ln lower, ln upper]`, normalized by the log-width.
pub fn log_fpr_auc(
    ds: &Dataset,
    lower: f64,
    upper: f64,
    recall: impl Fn(&Sample, f64) -> f64,
) -> Result<Vec<f64>, OracleBound> {
    let thresholds = descending(ds);
    let shared: Vec<f64> = thresholds.iter().map(|&t| shared_fpr_at(ds, t)).collect();
    let has_lower = shared.iter().any(|&f| f > 0.0 && f <= lower);
    let has_upper = shared.iter().any(|&f| f >= upper);
    match (has_lower, has_upper) {
        (true, true) => {}
        (false, false) => return Err(OracleBound::Both),
        (false, true) => return Err(OracleBound::Lower),
        (true, false) => return Err(OracleBound::Upper),
    }
    let (lo, hi) = (lower.ln(), upper.ln());
    Ok(ds
        .iter()
        .filter(|s| !s.is_normal())
        .map(|s| {
            let pts: Vec<(f64, f64)> = thresholds
                .iter()
                .zip(&shared)
                .filter(|(_, &f)| f > 0.0)
                .map(|(&t, &f)| (f.ln(), recall(s, t)))
                .collect();
            polyline_area(&pts, lo, hi) / (hi - lo)
        })
        .collect())
}

pub fn tpr_at(s: &Sample, t: f64) -> f64 {
    let c = recount(s, t);
    c.0 as f64 / c.2 as f64
}

pub fn iou_at(s: &Sample, t: f64) -> f64 {
    let c = recount(s, t);
    c.0 as f64 / (c.2 + c.1) as f64
}

/// Type-7 percentile by sorting and indexing.
pub fn sorted_percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = (v.len() - 1) as f64 * p / 100.0;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < v.len() {
        v[i] * (1.0 - frac) + v[i + 1] * frac
    } else {
        v[i]
    }
}

/// One-sided signed-rank p-value by enumerating all sign assignments.
pub fn enumerate_wilcoxon_p(a: &[f64], b: &[f64]) -> Option<(f64, f64)> {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return None;
    }
    let abs: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    // Average ranks by counting: rank = #smaller + (#equal + 1) / 2.
    let ranks: Vec<f64> = abs
        .iter()
        .map(|&x| {
            let smaller = abs.iter().filter(|&&y| y < x).count() as f64;
            let equal = abs.iter().filter(|&&y| y == x).count() as f64;
            smaller + (equal + 1.0) / 2.0
        })
        .collect();
    let observed: f64 = d.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
    let mut hits = 0u64;
    for signs in 0u64..(1 << n) {
        let w: f64 = (0..n).filter(|i| signs >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w >= observed - 1e-9 {
            hits += 1;
        }
    }
    Some((observed, hits as f64 / (1u64 << n) as f64))
}
