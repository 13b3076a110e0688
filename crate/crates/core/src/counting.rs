//! Per-image confusion counts over a whole threshold grid.
//!
//! Each image's scores are split by label and sorted once; the counts at
//! every threshold then come from a single pointer walk over the sorted
//! scores, so a sweep costs `O(M log M + K)` instead of `O(M * K)`.

use rayon::prelude::*;

use crate::data::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::grid::ThresholdGrid;

/// Scores of one image split by label, each ascending.
#[derive(Debug, Clone, Default)]
pub struct SortedScores {
    pub negatives: Vec<f64>,
    pub positives: Vec<f64>,
}

impl SortedScores {
    pub fn from_sample(sample: &Sample) -> Self {
        let n_pos = sample.mask().num_anomalous();
        let mut positives = Vec::with_capacity(n_pos);
        let mut negatives = Vec::with_capacity(sample.scores().len() - n_pos);
        for (&score, &label) in sample.scores().values().iter().zip(sample.mask().values()) {
            if label == 1 {
                positives.push(score);
            } else {
                negatives.push(score);
            }
        }
        positives.sort_unstable_by(f64::total_cmp);
        negatives.sort_unstable_by(f64::total_cmp);
        Self {
            negatives,
            positives,
        }
    }
}

/// For ascending `sorted` and ascending `thresholds`, the number of values
/// `>= t` for every threshold `t`.
pub fn count_at_or_above(sorted: &[f64], thresholds: &[f64]) -> Vec<u64> {
    let n = sorted.len();
    let mut below = 0usize;
    thresholds
        .iter()
        .map(|&t| {
            while below < n && sorted[below] < t {
                below += 1;
            }
            (n - below) as u64
        })
        .collect()
}

/// Confusion counts of one image at every threshold of a grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerImageCounts {
    pub tp: Vec<u64>,
    pub fp: Vec<u64>,
    pub n_pos: u64,
    pub n_neg: u64,
}

impl PerImageCounts {
    pub fn num_thresholds(&self) -> usize {
        self.tp.len()
    }

    pub fn tn(&self) -> Vec<u64> {
        self.fp.iter().map(|&fp| self.n_neg - fp).collect()
    }

    pub fn fn_(&self) -> Vec<u64> {
        self.tp.iter().map(|&tp| self.n_pos - tp).collect()
    }

    pub fn num_pixels(&self) -> u64 {
        self.n_pos + self.n_neg
    }
}

pub fn binclf_sweep(sample: &Sample, grid: &ThresholdGrid) -> PerImageCounts {
    sweep_sorted(&SortedScores::from_sample(sample), grid)
}

pub fn sweep_sorted(sorted: &SortedScores, grid: &ThresholdGrid) -> PerImageCounts {
    PerImageCounts {
        tp: count_at_or_above(&sorted.positives, grid.thresholds()),
        fp: count_at_or_above(&sorted.negatives, grid.thresholds()),
        n_pos: sorted.positives.len() as u64,
        n_neg: sorted.negatives.len() as u64,
    }
}

/// Sweeps every sample; output order follows the dataset regardless of
/// how many worker threads run.
pub fn sweep_dataset(dataset: &Dataset, grid: &ThresholdGrid) -> Vec<PerImageCounts> {
    dataset
        .samples()
        .par_iter()
        .map(|s| binclf_sweep(s, grid))
        .collect()
}

/// Per-image rates. `tpr` is `None` for normal images.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRates {
    pub fpr: Vec<f64>,
    pub tpr: Option<Vec<f64>>,
}

pub fn per_image_rates(counts: &PerImageCounts) -> Result<ImageRates> {
    if counts.n_neg == 0 {
        return Err(Error::NoNegativePixels { id: None });
    }
    let n_neg = counts.n_neg as f64;
    let fpr = counts.fp.iter().map(|&fp| fp as f64 / n_neg).collect();
    let tpr = (counts.n_pos > 0).then(|| {
        let n_pos = counts.n_pos as f64;
        counts.tp.iter().map(|&tp| tp as f64 / n_pos).collect()
    });
    Ok(ImageRates { fpr, tpr })
}

/// Rates with all pixels of all images pooled.
#[derive(Debug, Clone, PartialEq)]
pub struct SetRates {
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
}

pub fn set_rates(dataset: &Dataset, grid: &ThresholdGrid) -> Result<SetRates> {
    set_rates_from_counts(&sweep_dataset(dataset, grid))
}

pub fn set_rates_from_counts(counts: &[PerImageCounts]) -> Result<SetRates> {
    let k = counts.first().map_or(0, PerImageCounts::num_thresholds);
    let mut tp = vec![0u64; k];
    let mut fp = vec![0u64; k];
    let (mut n_pos, mut n_neg) = (0u64, 0u64);
    for c in counts {
        for (acc, v) in tp.iter_mut().zip(&c.tp) {
            *acc += v;
        }
        for (acc, v) in fp.iter_mut().zip(&c.fp) {
            *acc += v;
        }
        n_pos += c.n_pos;
        n_neg += c.n_neg;
    }
    if n_neg == 0 {
        return Err(Error::NoNegativePixels { id: None });
    }
    if n_pos == 0 {
        return Err(Error::NoPositivePixels);
    }
    Ok(SetRates {
        fpr: fp.iter().map(|&v| v as f64 / n_neg as f64).collect(),
        tpr: tp.iter().map(|&v| v as f64 / n_pos as f64).collect(),
    })
}
