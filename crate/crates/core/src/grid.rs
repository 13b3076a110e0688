//! Binarization thresholds shared by every curve.
//!
//! A pixel is predicted anomalous at threshold `t` iff its score is `>= t`.

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Default number of thresholds for linear sweeps.
pub const DEFAULT_NUM_THRESHOLDS: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridProvenance {
    /// `k` evenly spaced thresholds over the global score range.
    LinearGlobal(usize),
    /// Every distinct score value.
    ExactUnique,
    /// `k` evenly spaced thresholds between two bracketing thresholds.
    BoundBracketed { k: usize, lower: f64, upper: f64 },
    /// Caller-supplied thresholds.
    Explicit,
}

/// How [`build_threshold_grid`] places thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMode {
    LinearGlobal,
    ExactUnique,
}

/// Strictly ascending finite thresholds, at least two of them.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdGrid {
    thresholds: Vec<f64>,
    provenance: GridProvenance,
}

impl ThresholdGrid {
    pub fn new(thresholds: Vec<f64>, provenance: GridProvenance) -> Result<Self> {
        if thresholds.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 thresholds, got {}",
                thresholds.len()
            )));
        }
        if let Some(bad) = thresholds.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite threshold {bad}")));
        }
        if let Some(w) = thresholds.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid(format!(
                "thresholds not strictly ascending: {} >= {}",
                w[0], w[1]
            )));
        }
        Ok(Self {
            thresholds,
            provenance,
        })
    }

    pub fn explicit(thresholds: Vec<f64>) -> Result<Self> {
        Self::new(thresholds, GridProvenance::Explicit)
    }

    /// `k` evenly spaced thresholds from `lo` to `hi`, both included exactly.
    pub fn linear(lo: f64, hi: f64, k: usize, provenance: GridProvenance) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidGrid(format!("need k >= 2, got {k}")));
        }
        if !(lo < hi) {
            return Err(Error::DegenerateScores);
        }
        let step = (hi - lo) / (k - 1) as f64;
        let mut thresholds: Vec<f64> = (0..k).map(|i| lo + step * i as f64).collect();
        thresholds[k - 1] = hi;
        Self::new(thresholds, provenance)
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn provenance(&self) -> GridProvenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.thresholds[0]
    }

    pub fn last(&self) -> f64 {
        self.thresholds[self.thresholds.len() - 1]
    }
}

/// Builds a threshold grid from the scores of every sample in `dataset`.
///
/// `k` is only used by [`GridMode::LinearGlobal`].
pub fn build_threshold_grid(dataset: &Dataset, mode: GridMode, k: usize) -> Result<ThresholdGrid> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    match mode {
        GridMode::LinearGlobal => {
            let (lo, hi) = dataset
                .iter()
                .map(|s| s.scores().min_max())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (lo, hi)| {
                    (a.min(lo), b.max(hi))
                });
            if lo == hi {
                return Err(Error::DegenerateScores);
            }
            ThresholdGrid::linear(lo, hi, k, GridProvenance::LinearGlobal(k))
        }
        GridMode::ExactUnique => {
            let mut all: Vec<f64> = dataset
                .iter()
                .flat_map(|s| s.scores().values().iter().copied())
                .collect();
            all.sort_unstable_by(f64::total_cmp);
            all.dedup();
            if all.len() < 2 {
                return Err(Error::DegenerateScores);
            }
            ThresholdGrid::new(all, GridProvenance::ExactUnique)
        }
    }
}
