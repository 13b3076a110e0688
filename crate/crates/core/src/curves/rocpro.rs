use rayon::prelude::*;

use super::clipped_trapezoid;
use crate::counting::{set_rates_from_counts, sweep_sorted, SortedScores};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::grid::ThresholdGrid;
use crate::regions::{connected_components, per_region_tpr, Connectivity};

/// Default AUPRO integration limit on the set FPR.
pub const DEFAULT_AUPRO_MAX_FPR: f64 = 0.3;
/// Stricter AUPRO limit.
pub const AUPRO_STRICT_MAX_FPR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Roc,
    Pro,
}

/// Set FPR against a recall measure, one point per threshold.
///
/// For [`CurveKind::Roc`] the recall is the set TPR; for
/// [`CurveKind::Pro`] it is the unweighted mean of all region recalls.
#[derive(Debug, Clone, PartialEq)]
pub struct RocProCurve {
    pub thresholds: Vec<f64>,
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
    pub kind: CurveKind,
}

impl RocProCurve {
    /// Curve points ordered by ascending FPR, with the endpoints at
    /// `t -> +inf` (0, 0) and `t -> -inf` (1, 1) added.
    fn points_with_sentinels(&self) -> Vec<(f64, f64)> {
        let mut pts = Vec::with_capacity(self.fpr.len() + 2);
        pts.push((0.0, 0.0));
        pts.extend(self.fpr.iter().zip(&self.tpr).rev().map(|(&x, &y)| (x, y)));
        pts.push((1.0, 1.0));
        pts
    }
}

pub fn roc_curve(dataset: &Dataset, grid: &ThresholdGrid) -> Result<RocProCurve> {
    let counts: Vec<_> = dataset
        .samples()
        .par_iter()
        .map(|s| sweep_sorted(&SortedScores::from_sample(s), grid))
        .collect();
    let rates = set_rates_from_counts(&counts)?;
    Ok(RocProCurve {
        thresholds: grid.thresholds().to_vec(),
        fpr: rates.fpr,
        tpr: rates.tpr,
        kind: CurveKind::Roc,
    })
}

pub fn auroc(curve: &RocProCurve) -> f64 {
    clipped_trapezoid(&curve.points_with_sentinels(), 0.0, 1.0)
}

pub fn pro_curve(
    dataset: &Dataset,
    grid: &ThresholdGrid,
    connectivity: Connectivity,
) -> Result<RocProCurve> {
    let per_image: Vec<_> = dataset
        .samples()
        .par_iter()
        .map(|s| {
            let counts = sweep_sorted(&SortedScores::from_sample(s), grid);
            let regions = if s.is_normal() {
                Vec::new()
            } else {
                let rs = connected_components(s.mask(), connectivity);
                per_region_tpr(s, &rs, grid)?
            };
            Ok((counts, regions))
        })
        .collect::<Result<Vec<_>>>()?;

    let (counts, regions): (Vec<_>, Vec<_>) = per_image.into_iter().unzip();
    let k = grid.len();
    let mut sum = vec![0.0f64; k];
    let mut num_regions = 0usize;
    for row in regions.iter().flatten() {
        for (acc, v) in sum.iter_mut().zip(row) {
            *acc += v;
        }
        num_regions += 1;
    }
    if num_regions == 0 {
        return Err(Error::EmptyRegionSet {
            id: "<dataset>".to_owned(),
        });
    }
    let rates = set_rates_from_counts(&counts)?;
    Ok(RocProCurve {
        thresholds: grid.thresholds().to_vec(),
        fpr: rates.fpr,
        tpr: sum.into_iter().map(|s| s / num_regions as f64).collect(),
        kind: CurveKind::Pro,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuproOptions {
    pub max_fpr: f64,
    /// Stop at the last curve point with FPR <= `max_fpr` instead of
    /// interpolating up to `max_fpr` exactly.
    pub truncate: bool,
}

impl Default for AuproOptions {
    fn default() -> Self {
        Self {
            max_fpr: DEFAULT_AUPRO_MAX_FPR,
            truncate: false,
        }
    }
}

impl AuproOptions {
    pub fn with_max_fpr(max_fpr: f64) -> Self {
        Self {
            max_fpr,
            ..Self::default()
        }
    }
}

/// Area under a PRO (or ROC) curve over set FPR in `[0, U]`, divided by `U`.
pub fn aupro(curve: &RocProCurve, options: AuproOptions) -> Result<f64> {
    let u = options.max_fpr;
    if !(u > 0.0 && u <= 1.0) {
        return Err(Error::InvalidBounds {
            lower: 0.0,
            upper: u,
        });
    }
    let reachable = curve.fpr.iter().copied().filter(|&x| x <= u);
    let hi = if options.truncate {
        match reachable.fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x)))) {
            Some(x) => x,
            None => return Err(Error::BoundNotReachable { bound: u }),
        }
    } else {
        if reachable.count() == 0 {
            return Err(Error::BoundNotReachable { bound: u });
        }
        u
    };
    Ok(clipped_trapezoid(&curve.points_with_sentinels(), 0.0, hi) / u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{assemble_dataset, GtMask, ScoreMap};
    use crate::grid::{build_threshold_grid, GridMode};

    fn separable() -> Dataset {
        let normal = ScoreMap::from_fn(4, 4, |r, c| (r * 4 + c) as f64 / 100.0).unwrap();
        let anom_mask = GtMask::from_fn(4, 4, |r, c| (r == 0 && c == 0) || (r == 3 && c > 1));
        let anom = ScoreMap::from_fn(4, 4, |r, c| {
            if anom_mask.get(r, c) {
                1.0 + (r + c) as f64
            } else {
                0.05
            }
        })
        .unwrap();
        assemble_dataset([
            ("n", normal, GtMask::zeros(4, 4)),
            ("a", anom, anom_mask.clone()),
        ])
        .unwrap()
    }

    #[test]
    fn separable_scores_are_perfect() {
        let ds = separable();
        let grid = build_threshold_grid(&ds, GridMode::ExactUnique, 0).unwrap();
        assert_eq!(auroc(&roc_curve(&ds, &grid).unwrap()), 1.0);
        let pro = pro_curve(&ds, &grid, Connectivity::Eight).unwrap();
        for u in [0.3, 0.05] {
            let v = aupro(&pro, AuproOptions::with_max_fpr(u)).unwrap();
            assert!((v - 1.0).abs() <= 1e-12, "{v}");
        }
    }

    #[test]
    fn chance_level_roc() {
        // Both classes share the same multiset of scores.
        let scores = ScoreMap::new("s", 2, 4, vec![0.1, 0.2, 0.3, 0.4, 0.4, 0.3, 0.2, 0.1]).unwrap();
        let mask = GtMask::from_fn(2, 4, |r, _| r == 1);
        let ds = assemble_dataset([("s", scores, mask)]).unwrap();
        let grid = build_threshold_grid(&ds, GridMode::ExactUnique, 0).unwrap();
        assert!((auroc(&roc_curve(&ds, &grid).unwrap()) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_region_pro_equals_roc_at_full_range() {
        let scores = ScoreMap::new("s", 2, 3, vec![0.9, 0.2, 0.5, 0.7, 0.1, 0.6]).unwrap();
        let mask = GtMask::new("s", 2, 3, vec![1, 0, 0, 1, 0, 0]).unwrap();
        let ds = assemble_dataset([("s", scores, mask)]).unwrap();
        let grid = build_threshold_grid(&ds, GridMode::ExactUnique, 0).unwrap();
        let roc = auroc(&roc_curve(&ds, &grid).unwrap());
        let pro = aupro(
            &pro_curve(&ds, &grid, Connectivity::Eight).unwrap(),
            AuproOptions::with_max_fpr(1.0),
        )
        .unwrap();
        assert_eq!(roc, pro);
    }

    #[test]
    fn unreachable_bound() {
        // Every grid point has set FPR above 0.3.
        let scores = ScoreMap::new("s", 1, 4, vec![0.5, 0.5, 0.5, 0.9]).unwrap();
        let mask = GtMask::new("s", 1, 4, vec![0, 0, 0, 1]).unwrap();
        let ds = assemble_dataset([("s", scores, mask)]).unwrap();
        let grid = ThresholdGrid::explicit(vec![0.0, 0.5]).unwrap();
        let pro = pro_curve(&ds, &grid, Connectivity::Eight).unwrap();
        assert!(matches!(
            aupro(&pro, AuproOptions::default()),
            Err(Error::BoundNotReachable { .. })
        ));
    }

    #[test]
    fn truncation_never_exceeds_interpolation() {
        let ds = separable().map_scores(|v| (v * 7.0).sin()).unwrap();
        let grid = build_threshold_grid(&ds, GridMode::ExactUnique, 0).unwrap();
        let pro = pro_curve(&ds, &grid, Connectivity::Eight).unwrap();
        let full = aupro(&pro, AuproOptions::default()).unwrap();
        let cut = aupro(
            &pro,
            AuproOptions {
                truncate: true,
                ..AuproOptions::default()
            },
        )
        .unwrap();
        assert!(cut <= full + 1e-15);
    }
}
