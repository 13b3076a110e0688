//! Shared FPR against per-image IoU, integrated like AUPIMO.

use rayon::prelude::*;

use super::pimo::{shared_fpr_from_counts, AupimoResult, FprBounds, LogSupport, PartialPolicy};
use crate::counting::sweep_dataset;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::grid::ThresholdGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct IouCurve {
    pub grid: ThresholdGrid,
    pub shared_fpr: Vec<f64>,
    /// `|(a >= t) & y| / |(a >= t) | y|` per anomalous image and threshold.
    pub iou: Vec<Vec<f64>>,
    pub anomalous_ids: Vec<String>,
}

pub fn iou_curve(dataset: &Dataset, grid: &ThresholdGrid) -> Result<IouCurve> {
    if dataset.num_normal() == 0 {
        return Err(Error::NoNormalImages);
    }
    if dataset.num_anomalous() == 0 {
        return Err(Error::NoAnomalousImages);
    }
    let counts = sweep_dataset(dataset, grid);
    let shared_fpr = shared_fpr_from_counts(dataset, &counts);
    let (anomalous_ids, iou) = dataset
        .iter()
        .zip(&counts)
        .filter(|(s, _)| !s.is_normal())
        .map(|(s, c)| {
            // The union is the annotation plus the false positives.
            let row = c
                .tp
                .iter()
                .zip(&c.fp)
                .map(|(&tp, &fp)| tp as f64 / (c.n_pos + fp) as f64)
                .collect();
            (s.id().to_owned(), row)
        })
        .unzip();
    Ok(IouCurve {
        grid: grid.clone(),
        shared_fpr,
        iou,
        anomalous_ids,
    })
}

/// Normalized area under each image's IoU curve over shared FPR in `[L, U]`
/// (log-scale x-axis), with the same bounds handling as AUPIMO.
pub fn iou_auc(curve: &IouCurve, bounds: FprBounds, policy: PartialPolicy) -> Result<AupimoResult> {
    let support = LogSupport::new(curve.grid.thresholds(), &curve.shared_fpr, bounds, policy)?;
    let scores = curve
        .iou
        .par_iter()
        .map(|row| support.integrate(&curve.shared_fpr, row))
        .collect();
    Ok(AupimoResult {
        ids: curve.anomalous_ids.clone(),
        scores,
        fpr_lower_bound: bounds.lower,
        fpr_upper_bound: bounds.upper,
        thresh_lower_bound: support.thresh_lower,
        thresh_upper_bound: support.thresh_upper,
        num_threshs_effective: support.num_effective,
        partial: support.partial,
    })
}
