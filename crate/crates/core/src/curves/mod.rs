//! ROC, PRO, PIMO and IoU curves and their normalized areas.

mod iou;
mod pimo;
mod rocpro;

pub use iou::{iou_auc, iou_curve, IouCurve};
pub use pimo::{
    aupimo, compute_aupimo, pimo_curve, shared_fpr_threshold, AupimoConfig, AupimoResult,
    FprBounds, PartialPolicy, PimoCurve, DEFAULT_FPR_LOWER, DEFAULT_FPR_UPPER,
};
pub use rocpro::{
    aupro, auroc, pro_curve, roc_curve, AuproOptions, CurveKind, RocProCurve, AUPRO_STRICT_MAX_FPR,
    DEFAULT_AUPRO_MAX_FPR,
};

/// Trapezoidal area under the polyline `points` restricted to `x in [lo, hi]`.
///
/// Points must be ordered by non-decreasing `x`. Segments crossing a bound
/// are cut there with `y` linearly interpolated; vertical segments add
/// nothing.
pub(crate) fn clipped_trapezoid(points: &[(f64, f64)], lo: f64, hi: f64) -> f64 {
    let mut area = 0.0;
    for w in points.windows(2) {
        let ((xa, ya), (xb, yb)) = (w[0], w[1]);
        debug_assert!(xa <= xb, "points must be sorted by x");
        if xa >= xb {
            continue;
        }
        let left = xa.max(lo);
        let right = xb.min(hi);
        if left >= right {
            continue;
        }
        let at = |x: f64| {
            if x == xa {
                ya
            } else if x == xb {
                yb
            } else {
                ya + (yb - ya) * (x - xa) / (xb - xa)
            }
        };
        area += (right - left) * (at(left) + at(right)) / 2.0;
    }
    area
}
