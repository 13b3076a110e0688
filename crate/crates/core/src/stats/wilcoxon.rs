//! One-sided Wilcoxon signed-rank test on paired per-image scores.
//!
//! For up to [`EXACT_MAX_N`] nonzero differences the p-value is exact: the
//! null distribution of the positive rank sum is the distribution over all
//! `2^n` equally likely sign assignments, tabulated by dynamic programming
//! over doubled ranks (average ranks of ties are half-integers). Above that
//! a normal approximation with tie-corrected variance and continuity
//! correction is used.

use statrs::distribution::{ContinuousCDF, Normal};

use super::ranks::PairedScoreTable;
use crate::error::{Error, Result};

/// Largest number of nonzero differences for which the exact test runs.
pub const EXACT_MAX_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Alternative {
    /// Model A tends to score higher than model B.
    #[default]
    AGreater,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroMethod {
    /// Drop zero differences before ranking.
    #[default]
    Wilcox,
    /// Rank zero differences with the others, then drop them.
    Pratt,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// Sum of the ranks of the positive differences `a - b`.
    pub statistic: f64,
    pub p_value: f64,
    /// `100 * (1 - p_value)`.
    pub confidence: f64,
    /// Number of nonzero differences.
    pub n: usize,
    pub exact: bool,
}

/// Average ranks (1-based) of `values`; ties share the mean of their ranks.
pub(crate) fn average_ranks_ascending(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Null distribution of the doubled positive rank sum: entry `s` counts the
/// sign assignments whose positive ranks sum to `s / 2`.
pub fn signed_rank_null_counts(ranks: &[f64]) -> Vec<u64> {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    let mut reach = 0;
    for &d in &doubled {
        for s in (0..=reach).rev() {
            let c = counts[s];
            if c > 0 {
                counts[s + d] += c;
            }
        }
        reach += d;
    }
    counts
}

/// Signed-rank test on raw paired scores.
pub fn signed_rank_test(
    a: &[f64],
    b: &[f64],
    alternative: Alternative,
    zero_method: ZeroMethod,
) -> Result<WilcoxonResult> {
    assert_eq!(a.len(), b.len(), "paired samples must have equal length");
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let (kept, ranks): (Vec<f64>, Vec<f64>) = match zero_method {
        ZeroMethod::Wilcox => {
            let nz: Vec<f64> = diffs.into_iter().filter(|&d| d != 0.0).collect();
            let ranks = average_ranks_ascending(&nz.iter().map(|d| d.abs()).collect::<Vec<_>>());
            (nz, ranks)
        }
        ZeroMethod::Pratt => {
            let ranks = average_ranks_ascending(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
            diffs
                .into_iter()
                .zip(ranks)
                .filter(|(d, _)| *d != 0.0)
                .unzip()
        }
    };
    let n = kept.len();
    if n == 0 {
        return Err(Error::AllDifferencesZero);
    }
    let statistic: f64 = kept
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();

    let Alternative::AGreater = alternative;
    let (p_value, exact) = if n <= EXACT_MAX_N {
        let counts = signed_rank_null_counts(&ranks);
        let observed = (statistic * 2.0).round() as usize;
        let upper: u64 = counts[observed..].iter().sum();
        (upper as f64 / (1u64 << n) as f64, true)
    } else {
        let mean = ranks.iter().sum::<f64>() / 2.0;
        let var = ranks.iter().map(|r| r * r).sum::<f64>() / 4.0;
        let z = (statistic - mean - 0.5) / var.sqrt();
        let normal = Normal::standard();
        (normal.sf(z), false)
    };
    Ok(WilcoxonResult {
        statistic,
        p_value,
        confidence: 100.0 * (1.0 - p_value),
        n,
        exact,
    })
}

/// Tests whether `model_a` scores higher than `model_b` on the images both
/// were scored on.
pub fn wilcoxon_signed_rank(
    table: &PairedScoreTable,
    model_a: &str,
    model_b: &str,
    alternative: Alternative,
    zero_method: ZeroMethod,
) -> Result<WilcoxonResult> {
    let (a, b) = table.paired(model_a, model_b)?;
    signed_rank_test(&a, &b, alternative, zero_method)
}
