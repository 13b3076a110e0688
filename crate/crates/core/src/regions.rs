//! Connected-component analysis.
//!
//! Labeling is a two-pass union-find. Region ids run `1..=R` in raster-scan
//! order of each region's first pixel, so the output only depends on the
//! input mask.

use crate::counting::count_at_or_above;
use crate::data::{GtMask, Sample};
use crate::error::{Error, Result};
use crate::grid::ThresholdGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl Connectivity {
    pub fn from_neighbors(n: u8) -> Option<Self> {
        match n {
            4 => Some(Connectivity::Four),
            8 => Some(Connectivity::Eight),
            _ => None,
        }
    }
}

/// Maximal connected components of a binary raster. Label 0 is background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionSet {
    pub height: usize,
    pub width: usize,
    pub labels: Vec<u32>,
    pub region_sizes: Vec<usize>,
    pub connectivity: Connectivity,
}

impl RegionSet {
    pub fn num_regions(&self) -> usize {
        self.region_sizes.len()
    }
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn new() -> Self {
        // Index 0 is the background and never merged.
        Self { parent: vec![0] }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) -> u32 {
        let (ra, rb) = (self.find(a), self.find(b));
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi as usize] = lo;
        lo
    }
}

/// Labels the pixels for which `foreground(index)` holds.
pub fn label_raster(
    height: usize,
    width: usize,
    connectivity: Connectivity,
    foreground: impl Fn(usize) -> bool,
) -> RegionSet {
    let mut labels = vec![0u32; height * width];
    let mut sets = DisjointSet::new();

    for r in 0..height {
        let row = r * width;
        for c in 0..width {
            let i = row + c;
            if !foreground(i) {
                continue;
            }
            let mut current = 0u32;
            let mut visit = |n: u32, sets: &mut DisjointSet| {
                if n != 0 {
                    current = if current == 0 { n } else { sets.union(current, n) };
                }
            };
            if c > 0 {
                visit(labels[i - 1], &mut sets);
            }
            if r > 0 {
                let up = i - width;
                visit(labels[up], &mut sets);
                if connectivity == Connectivity::Eight {
                    if c > 0 {
                        visit(labels[up - 1], &mut sets);
                    }
                    if c + 1 < width {
                        visit(labels[up + 1], &mut sets);
                    }
                }
            }
            labels[i] = if current == 0 { sets.make() } else { current };
        }
    }

    // Second pass: resolve roots and renumber in raster order.
    let mut final_id = vec![0u32; sets.parent.len()];
    let mut region_sizes = Vec::new();
    for label in labels.iter_mut() {
        if *label == 0 {
            continue;
        }
        let root = sets.find(*label) as usize;
        if final_id[root] == 0 {
            region_sizes.push(0);
            final_id[root] = region_sizes.len() as u32;
        }
        let id = final_id[root];
        region_sizes[id as usize - 1] += 1;
        *label = id;
    }

    RegionSet {
        height,
        width,
        labels,
        region_sizes,
        connectivity,
    }
}

pub fn connected_components(mask: &GtMask, connectivity: Connectivity) -> RegionSet {
    let values = mask.values();
    label_raster(mask.height(), mask.width(), connectivity, |i| values[i] == 1)
}

/// Recall of every region at every threshold: row `r` holds
/// `|{j in region r : a_j >= t_k}| / |region r|` for each `k`.
pub fn per_region_tpr(
    sample: &Sample,
    regions: &RegionSet,
    grid: &ThresholdGrid,
) -> Result<Vec<Vec<f64>>> {
    if regions.num_regions() == 0 {
        return Err(Error::EmptyRegionSet {
            id: sample.id().to_owned(),
        });
    }
    // Bucket scores by region (counting sort), then sort each bucket once.
    let mut offsets = Vec::with_capacity(regions.num_regions() + 1);
    offsets.push(0usize);
    for size in &regions.region_sizes {
        offsets.push(offsets.last().unwrap() + size);
    }
    let mut cursor = offsets.clone();
    let mut bucketed = vec![0.0f64; *offsets.last().unwrap()];
    for (&label, &score) in regions.labels.iter().zip(sample.scores().values()) {
        if label != 0 {
            let slot = &mut cursor[label as usize - 1];
            bucketed[*slot] = score;
            *slot += 1;
        }
    }
    Ok(offsets
        .windows(2)
        .map(|w| {
            let region = &mut bucketed[w[0]..w[1]];
            region.sort_unstable_by(f64::total_cmp);
            let size = region.len() as f64;
            count_at_or_above(region, grid.thresholds())
                .into_iter()
                .map(|n| n as f64 / size)
                .collect()
        })
        .collect())
}

/// Number of connected components of `scores >= threshold` on a normal image.
pub fn count_fp_regions(sample: &Sample, threshold: f64, connectivity: Connectivity) -> Result<usize> {
    if !sample.is_normal() {
        return Err(Error::NotANormalImage {
            id: sample.id().to_owned(),
        });
    }
    let scores = sample.scores().values();
    Ok(label_raster(sample.height(), sample.width(), connectivity, |i| {
        scores[i] >= threshold
    })
    .num_regions())
}

/// One point of the FP-rate vs. FP-region-count scatter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpRegionPoint {
    pub target_fpr: f64,
    pub threshold: f64,
    pub fpr: f64,
    pub num_regions: usize,
}

/// For each target FPR, binarizes a normal image at the threshold whose
/// image FPR is closest to the target and counts the FP regions.
pub fn fp_region_scatter(
    sample: &Sample,
    target_fprs: &[f64],
    connectivity: Connectivity,
) -> Result<Vec<FpRegionPoint>> {
    if !sample.is_normal() {
        return Err(Error::NotANormalImage {
            id: sample.id().to_owned(),
        });
    }
    let mut sorted = sample.scores().values().to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let m = sorted.len();
    target_fprs
        .iter()
        .map(|&target| {
            let k = ((target * m as f64).round() as usize).clamp(1, m);
            let threshold = sorted[k - 1];
            let above = sorted.partition_point(|&v| v >= threshold);
            Ok(FpRegionPoint {
                target_fpr: target,
                threshold,
                fpr: above as f64 / m as f64,
                num_regions: count_fp_regions(sample, threshold, connectivity)?,
            })
        })
        .collect()
}

/// `n` log-spaced levels from `lo` to `hi`, each multiplied by a factor
/// drawn uniformly from `[1 - jitter, 1 + jitter]`.
pub fn jittered_log_levels(lo: f64, hi: f64, n: usize, jitter: f64, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            let frac = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
            let factor = if jitter > 0.0 {
                rng.random_range(1.0 - jitter..=1.0 + jitter)
            } else {
                1.0
            };
            (llo + frac * (lhi - llo)).exp() * factor
        })
        .collect()
}
