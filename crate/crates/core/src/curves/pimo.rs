//! Per-image overlap (PIMO) curves and their normalized log-scale areas.
//!
//! The x-axis of a PIMO curve is the shared FPR: the mean per-image FPR over
//! the normal images only. Each anomalous image keeps its own TPR curve, and
//! its AUPIMO is the area under `TPR` against `ln(shared FPR)` over
//! `[ln L, ln U]`, divided by `ln(U / L)`. The log base cancels out.

use rayon::prelude::*;

use super::clipped_trapezoid;
use crate::counting::{count_at_or_above, sweep_dataset, PerImageCounts};
use crate::data::{Dataset, Sample};
use crate::error::{Bound, Error, Result};
use crate::grid::{GridProvenance, ThresholdGrid, DEFAULT_NUM_THRESHOLDS};

pub const DEFAULT_FPR_LOWER: f64 = 1e-5;
pub const DEFAULT_FPR_UPPER: f64 = 1e-4;

/// Shared-FPR integration range `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FprBounds {
    pub lower: f64,
    pub upper: f64,
}

impl Default for FprBounds {
    fn default() -> Self {
        Self {
            lower: DEFAULT_FPR_LOWER,
            upper: DEFAULT_FPR_UPPER,
        }
    }
}

impl FprBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        let b = Self { lower, upper };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower > 0.0 && self.lower < self.upper && self.upper <= 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidBounds {
                lower: self.lower,
                upper: self.upper,
            })
        }
    }

    /// `1 / ln(U / L)`, the AUPIMO normalization factor.
    pub fn normalization(&self) -> f64 {
        1.0 / (self.upper / self.lower).ln()
    }
}

/// What to do when the shared FPR curve does not reach a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PartialPolicy {
    /// Fail with [`Error::BoundNotBracketed`].
    #[default]
    Strict,
    /// Integrate the covered part of the range and normalize by its log-width.
    Renormalize,
}

/// Shared FPR and per-anomalous-image TPR at every threshold of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PimoCurve {
    pub grid: ThresholdGrid,
    pub shared_fpr: Vec<f64>,
    /// One row per anomalous image, same order as `anomalous_ids`.
    pub tpr: Vec<Vec<f64>>,
    pub anomalous_ids: Vec<String>,
}

/// Per-image AUPIMO scores with the bounds they were integrated over.
#[derive(Debug, Clone, PartialEq)]
pub struct AupimoResult {
    pub ids: Vec<String>,
    pub scores: Vec<f64>,
    pub fpr_lower_bound: f64,
    pub fpr_upper_bound: f64,
    /// Threshold where the shared FPR crosses the upper FPR bound.
    pub thresh_lower_bound: f64,
    /// Threshold where the shared FPR crosses the lower FPR bound.
    pub thresh_upper_bound: f64,
    /// Grid points whose shared FPR lies in `[L, U]`.
    pub num_threshs_effective: usize,
    /// Set when a [`PartialPolicy::Renormalize`] run covered only part of
    /// `[L, U]`; holds the shared-FPR range actually integrated.
    pub partial: Option<(f64, f64)>,
}

impl AupimoResult {
    pub fn mean(&self) -> f64 {
        self.scores.iter().sum::<f64>() / self.scores.len() as f64
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.ids.iter().position(|i| i == id).map(|p| self.scores[p])
    }
}

/// Mean of per-image FPRs. Every shared-FPR value in this crate goes
/// through here so that different code paths agree bit for bit.
fn mean_fpr(fp_and_neg: impl Iterator<Item = (u64, u64)>, num_images: usize) -> f64 {
    let sum: f64 = fp_and_neg.map(|(fp, n)| fp as f64 / n as f64).sum();
    sum / num_images as f64
}

fn check_classes(dataset: &Dataset) -> Result<()> {
    if dataset.num_normal() == 0 {
        return Err(Error::NoNormalImages);
    }
    if dataset.num_anomalous() == 0 {
        return Err(Error::NoAnomalousImages);
    }
    Ok(())
}

pub(crate) fn shared_fpr_from_counts(dataset: &Dataset, counts: &[PerImageCounts]) -> Vec<f64> {
    let normal: Vec<&PerImageCounts> = dataset
        .iter()
        .zip(counts)
        .filter(|(s, _)| s.is_normal())
        .map(|(_, c)| c)
        .collect();
    let k = counts.first().map_or(0, PerImageCounts::num_thresholds);
    (0..k)
        .map(|i| mean_fpr(normal.iter().map(|c| (c.fp[i], c.n_neg)), normal.len()))
        .collect()
}

pub fn pimo_curve(dataset: &Dataset, grid: &ThresholdGrid) -> Result<PimoCurve> {
    check_classes(dataset)?;
    let counts = sweep_dataset(dataset, grid);
    let shared_fpr = shared_fpr_from_counts(dataset, &counts);
    let (anomalous_ids, tpr) = dataset
        .iter()
        .zip(&counts)
        .filter(|(s, _)| !s.is_normal())
        .map(|(s, c)| {
            let n = c.n_pos as f64;
            (s.id().to_owned(), c.tp.iter().map(|&tp| tp as f64 / n).collect())
        })
        .unzip();
    Ok(PimoCurve {
        grid: grid.clone(),
        shared_fpr,
        tpr,
        anomalous_ids,
    })
}

/// Integration support of a shared-FPR curve within the requested bounds.
pub(crate) struct LogSupport {
    lo: f64,
    hi: f64,
    /// Grid points with nonzero shared FPR, by descending threshold.
    order: Vec<usize>,
    pub thresh_lower: f64,
    pub thresh_upper: f64,
    pub num_effective: usize,
    pub partial: Option<(f64, f64)>,
}

impl LogSupport {
    pub(crate) fn new(
        thresholds: &[f64],
        shared_fpr: &[f64],
        bounds: FprBounds,
        policy: PartialPolicy,
    ) -> Result<Self> {
        bounds.validate()?;
        let order: Vec<usize> = (0..shared_fpr.len())
            .rev()
            .filter(|&k| shared_fpr[k] > 0.0)
            .collect();
        let (min_fpr, max_fpr) = order
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &k| {
                (lo.min(shared_fpr[k]), hi.max(shared_fpr[k]))
            });
        let lower_ok = min_fpr <= bounds.lower;
        let upper_ok = max_fpr >= bounds.upper;
        let (lo_fpr, hi_fpr, partial) = match (lower_ok, upper_ok, policy) {
            (true, true, _) => (bounds.lower, bounds.upper, None),
            (l, u, PartialPolicy::Strict) => {
                let which = match (l, u) {
                    (false, false) => Bound::Both,
                    (false, _) => Bound::Lower,
                    _ => Bound::Upper,
                };
                return Err(Error::BoundNotBracketed { which });
            }
            (_, _, PartialPolicy::Renormalize) => {
                let lo = bounds.lower.max(min_fpr);
                let hi = bounds.upper.min(max_fpr);
                if !(lo < hi) {
                    return Err(Error::BoundNotBracketed { which: Bound::Both });
                }
                (lo, hi, Some((lo, hi)))
            }
        };
        let thresh_lower = (0..shared_fpr.len())
            .rev()
            .find(|&k| shared_fpr[k] >= hi_fpr)
            .map(|k| thresholds[k])
            .expect("upper bound is bracketed");
        let thresh_upper = (0..shared_fpr.len())
            .find(|&k| shared_fpr[k] > 0.0 && shared_fpr[k] <= lo_fpr)
            .map(|k| thresholds[k])
            .expect("lower bound is bracketed");
        let num_effective = shared_fpr
            .iter()
            .filter(|&&f| f >= bounds.lower && f <= bounds.upper)
            .count();
        Ok(Self {
            lo: lo_fpr.ln(),
            hi: hi_fpr.ln(),
            order,
            thresh_lower,
            thresh_upper,
            num_effective,
            partial,
        })
    }

    /// Normalized area of one row against `ln(shared FPR)`. Rows hold rates
    /// in [0, 1], so the result is clamped there to absorb rounding.
    pub(crate) fn integrate(&self, shared_fpr: &[f64], row: &[f64]) -> f64 {
        let points: Vec<(f64, f64)> = self
            .order
            .iter()
            .map(|&k| (shared_fpr[k].ln(), row[k]))
            .collect();
        (clipped_trapezoid(&points, self.lo, self.hi) / (self.hi - self.lo)).clamp(0.0, 1.0)
    }
}

pub fn aupimo(pimo: &PimoCurve, bounds: FprBounds, policy: PartialPolicy) -> Result<AupimoResult> {
    let support = LogSupport::new(pimo.grid.thresholds(), &pimo.shared_fpr, bounds, policy)?;
    let scores = pimo
        .tpr
        .par_iter()
        .map(|row| support.integrate(&pimo.shared_fpr, row))
        .collect();
    Ok(AupimoResult {
        ids: pimo.anomalous_ids.clone(),
        scores,
        fpr_lower_bound: bounds.lower,
        fpr_upper_bound: bounds.upper,
        thresh_lower_bound: support.thresh_lower,
        thresh_upper_bound: support.thresh_upper,
        num_threshs_effective: support.num_effective,
        partial: support.partial,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AupimoConfig {
    pub bounds: FprBounds,
    pub num_thresholds: usize,
    pub policy: PartialPolicy,
}

impl Default for AupimoConfig {
    fn default() -> Self {
        Self {
            bounds: FprBounds::default(),
            num_thresholds: DEFAULT_NUM_THRESHOLDS,
            policy: PartialPolicy::Strict,
        }
    }
}

/// The highest scores of one normal image, enough to count false positives
/// exactly wherever the shared FPR is at most the tail's design level.
struct NormalTail {
    /// Ascending.
    tail: Vec<f64>,
    n_neg: u64,
    /// Counts are exact for thresholds strictly above this value.
    exact_above: f64,
}

impl NormalTail {
    /// Keeps enough of the top scores that any threshold where the tail is
    /// saturated has shared FPR above `level`.
    fn new(sample: &Sample, level: f64, num_normal: usize) -> Self {
        let values = sample.scores().values();
        let n = values.len();
        let budget = (level * n as f64 * num_normal as f64).floor() as usize + 2;
        if budget >= n {
            let mut tail = values.to_vec();
            tail.sort_unstable_by(f64::total_cmp);
            return Self {
                tail,
                n_neg: n as u64,
                exact_above: f64::NEG_INFINITY,
            };
        }
        let mut buf = values.to_vec();
        let (_, _, top) = buf.select_nth_unstable_by(n - budget - 1, f64::total_cmp);
        let mut tail = top.to_vec();
        tail.sort_unstable_by(f64::total_cmp);
        // The pivot and everything below it are <= the smallest tail value.
        let exact_above = tail[0];
        Self {
            tail,
            n_neg: n as u64,
            exact_above,
        }
    }

    fn count(&self, t: f64) -> Option<u64> {
        (t > self.exact_above)
            .then(|| (self.tail.len() - self.tail.partition_point(|&v| v < t)) as u64)
    }
}

struct NormalTails {
    tails: Vec<NormalTail>,
}

impl NormalTails {
    fn new<'a>(normals: impl IntoParallelIterator<Item = &'a Sample>, level: f64, num_normal: usize) -> Self {
        Self {
            tails: normals
                .into_par_iter()
                .map(|s| NormalTail::new(s, level, num_normal))
                .collect(),
        }
    }

    /// Exact shared FPR, or `None` where it is known to exceed the design level.
    fn shared_fpr(&self, t: f64) -> Option<f64> {
        let counts = self
            .tails
            .iter()
            .map(|tail| tail.count(t).map(|c| (c, tail.n_neg)))
            .collect::<Option<Vec<_>>>()?;
        Some(mean_fpr(counts.into_iter(), self.tails.len()))
    }

    fn candidates(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.tails.iter().flat_map(|t| t.tail.iter().copied()).collect();
        all.sort_unstable_by(f64::total_cmp);
        all.dedup();
        all
    }
}

/// Smallest normal-image score at which the shared FPR is at most `level`.
pub fn shared_fpr_threshold(dataset: &Dataset, level: f64) -> Result<f64> {
    if dataset.num_normal() == 0 {
        return Err(Error::NoNormalImages);
    }
    let normals: Vec<&Sample> = dataset.normal().collect();
    let tails = NormalTails::new(normals.clone(), level, normals.len());
    let candidates = tails.candidates();
    let idx = candidates.partition_point(|&t| !matches!(tails.shared_fpr(t), Some(f) if f <= level));
    candidates
        .get(idx)
        .copied()
        .ok_or(Error::BoundNotBracketed { which: Bound::Lower })
}

/// AUPIMO of every anomalous image, on a grid of `num_thresholds`
/// thresholds placed between the shared-FPR crossings of `U` and `L`.
///
/// Only the top scores of the normal images are needed to locate the
/// crossings and to evaluate the shared FPR there, so normal images are
/// reduced with a linear-time selection instead of a full sort. Anomalous
/// images only contribute their anomalous pixels.
pub fn compute_aupimo(dataset: &Dataset, config: AupimoConfig) -> Result<(PimoCurve, AupimoResult)> {
    check_classes(dataset)?;
    config.bounds.validate()?;
    let FprBounds { lower, upper } = config.bounds;

    let normals: Vec<&Sample> = dataset.normal().collect();
    let tails = NormalTails::new(normals.clone(), upper, normals.len());
    let candidates = tails.candidates();

    // Last candidate whose shared FPR is still >= U (unknown counts as above U).
    let above_upper = candidates.partition_point(|&t| tails.shared_fpr(t).is_none_or(|f| f >= upper));
    if above_upper == 0 {
        // Every normal score is already below U; happens only with U > 1.
        return Err(Error::BoundNotBracketed { which: Bound::Upper });
    }
    if above_upper == candidates.len() {
        return Err(Error::BoundNotBracketed {
            which: if config.policy == PartialPolicy::Strict {
                Bound::Lower
            } else {
                Bound::Both
            },
        });
    }
    let t_lo = candidates[above_upper - 1];
    let below_lower =
        candidates.partition_point(|&t| !matches!(tails.shared_fpr(t), Some(f) if f <= lower));
    let t_hi = match candidates.get(below_lower) {
        Some(&t) => t,
        None if config.policy == PartialPolicy::Renormalize => *candidates.last().unwrap(),
        None => return Err(Error::BoundNotBracketed { which: Bound::Lower }),
    };

    let grid = ThresholdGrid::linear(
        t_lo,
        t_hi,
        config.num_thresholds,
        GridProvenance::BoundBracketed {
            k: config.num_thresholds,
            lower: t_lo,
            upper: t_hi,
        },
    )?;

    let shared_fpr: Vec<f64> = grid
        .thresholds()
        .iter()
        .map(|&t| match tails.shared_fpr(t) {
            Some(f) => f,
            None => {
                // Only the lowest grid point can be outside every tail.
                let counts = normals.iter().zip(&tails.tails).map(|(s, tail)| {
                    let c = tail.count(t).unwrap_or_else(|| {
                        s.scores().values().iter().filter(|&&v| v >= t).count() as u64
                    });
                    (c, tail.n_neg)
                });
                mean_fpr(counts, normals.len())
            }
        })
        .collect();

    let (anomalous_ids, tpr): (Vec<String>, Vec<Vec<f64>>) = dataset
        .anomalous()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|s| {
            let mut positives: Vec<f64> = s
                .scores()
                .values()
                .iter()
                .zip(s.mask().values())
                .filter(|(_, &m)| m == 1)
                .map(|(&v, _)| v)
                .collect();
            positives.sort_unstable_by(f64::total_cmp);
            let n = positives.len() as f64;
            let row = count_at_or_above(&positives, grid.thresholds())
                .into_iter()
                .map(|c| c as f64 / n)
                .collect();
            (s.id().to_owned(), row)
        })
        .unzip();

    let pimo = PimoCurve {
        grid,
        shared_fpr,
        tpr,
        anomalous_ids,
    };
    let result = aupimo(&pimo, config.bounds, config.policy)?;
    Ok((pimo, result))
}
