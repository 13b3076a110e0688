//! Boxplot statistics, percentiles and representative-sample selection.
//!
//! Quantiles interpolate linearly between the closest order statistics
//! (position `(n - 1) * p` in the sorted data, a.k.a. "type 7").

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Percentile used as the worst-case-oriented summary.
pub const P33: f64 = 33.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BoxplotStats {
    pub mean: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub flier_ids: Vec<String>,
}

impl BoxplotStats {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }

    pub fn get(&self, stat: BoxplotStat) -> f64 {
        match stat {
            BoxplotStat::Mean => self.mean,
            BoxplotStat::Q1 => self.q1,
            BoxplotStat::Median => self.median,
            BoxplotStat::Q3 => self.q3,
            BoxplotStat::WhiskerLo => self.whisker_lo,
            BoxplotStat::WhiskerHi => self.whisker_hi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoxplotStat {
    Mean,
    Q1,
    Median,
    Q3,
    WhiskerLo,
    WhiskerHi,
}

impl BoxplotStat {
    pub const ALL: [BoxplotStat; 6] = [
        BoxplotStat::Mean,
        BoxplotStat::Q1,
        BoxplotStat::Median,
        BoxplotStat::Q3,
        BoxplotStat::WhiskerLo,
        BoxplotStat::WhiskerHi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoxplotStat::Mean => "mean",
            BoxplotStat::Q1 => "q1",
            BoxplotStat::Median => "median",
            BoxplotStat::Q3 => "q3",
            BoxplotStat::WhiskerLo => "whisker_lo",
            BoxplotStat::WhiskerHi => "whisker_hi",
        }
    }
}

fn sorted_values(values: impl Iterator<Item = f64>) -> Result<Vec<f64>> {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return Err(Error::EmptyScores);
    }
    v.sort_unstable_by(f64::total_cmp);
    Ok(v)
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi || frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

/// `p`-th percentile (`p` in 0..=100).
pub fn percentile(scores: &[f64], p: f64) -> Result<f64> {
    let sorted = sorted_values(scores.iter().copied())?;
    Ok(quantile_sorted(&sorted, p / 100.0))
}

pub fn mean(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
pub fn std_dev(scores: &[f64]) -> Result<f64> {
    let m = mean(scores)?;
    if scores.len() == 1 {
        return Ok(0.0);
    }
    let ss: f64 = scores.iter().map(|v| (v - m).powi(2)).sum();
    Ok((ss / (scores.len() - 1) as f64).sqrt())
}

pub fn boxplot_stats(scores: &[(String, f64)]) -> Result<BoxplotStats> {
    let sorted = sorted_values(scores.iter().map(|(_, v)| *v))?;
    let q1 = quantile_sorted(&sorted, 0.25);
    let median = quantile_sorted(&sorted, 0.5);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let (fence_lo, fence_hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    // Whiskers end at the most extreme data points inside the fences.
    let whisker_lo = sorted.iter().copied().find(|&v| v >= fence_lo).unwrap_or(q1).min(q1);
    let whisker_hi = sorted.iter().rev().copied().find(|&v| v <= fence_hi).unwrap_or(q3).max(q3);
    let flier_ids = scores
        .iter()
        .filter(|(_, v)| *v < whisker_lo || *v > whisker_hi)
        .map(|(id, _)| id.clone())
        .collect();
    Ok(BoxplotStats {
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        q1,
        median,
        q3,
        whisker_lo,
        whisker_hi,
        flier_ids,
    })
}

/// For each boxplot statistic, the id whose score is closest to it.
/// Ties go to the lexicographically smallest id.
pub fn select_representative_samples(
    scores: &[(String, f64)],
) -> Result<BTreeMap<BoxplotStat, String>> {
    let stats = boxplot_stats(scores)?;
    Ok(BoxplotStat::ALL
        .iter()
        .map(|&stat| {
            let target = stats.get(stat);
            let (id, _) = scores
                .iter()
                .min_by(|(ia, va), (ib, vb)| {
                    (va - target)
                        .abs()
                        .total_cmp(&(vb - target).abs())
                        .then_with(|| ia.cmp(ib))
                })
                .expect("scores are not empty");
            (stat, id.clone())
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn named(values: &[f64]) -> Vec<(String, f64)> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| (format!("img{i:03}"), v))
            .collect()
    }

    #[test]
    fn singleton() {
        let b = boxplot_stats(&named(&[0.5])).unwrap();
        for s in BoxplotStat::ALL {
            assert_eq!(b.get(s), 0.5);
        }
        assert!(b.flier_ids.is_empty());
    }

    #[test]
    fn lone_high_value_is_a_flier() {
        // Type 7 on {0,0,0,0,1}: q1 = q3 = 0, IQR = 0, upper fence 0.
        let b = boxplot_stats(&named(&[0.0, 0.0, 0.0, 0.0, 1.0])).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (0.0, 0.0, 0.0));
        assert_eq!(b.whisker_hi, 0.0);
        assert_eq!(b.flier_ids, vec!["img004"]);
    }

    #[test]
    fn whiskers_stop_at_data_points() {
        let b = boxplot_stats(&named(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (0.3, 0.5, 0.7));
        assert_eq!((b.whisker_lo, b.whisker_hi), (0.1, 0.9));
        assert!(b.whisker_lo <= b.q1 && b.q3 <= b.whisker_hi);
    }

    #[test]
    fn empty_scores() {
        assert!(matches!(boxplot_stats(&[]), Err(Error::EmptyScores)));
        assert!(matches!(percentile(&[], 33.0), Err(Error::EmptyScores)));
        assert!(matches!(select_representative_samples(&[]), Err(Error::EmptyScores)));
    }

    #[test]
    fn percentiles() {
        assert_eq!(percentile(&[0.0, 0.5, 1.0], 50.0).unwrap(), 0.5);
        assert_eq!(percentile(&[0.2], 33.0).unwrap(), 0.2);
        assert_eq!(percentile(&[0.2], 99.0).unwrap(), 0.2);
        // (4 - 1) * 0.33 = 0.99 between 0 and 1.
        assert!((percentile(&[1.0, 0.0, 2.0, 3.0], 33.0).unwrap() - 0.99).abs() < 1e-12);
    }

    #[test]
    fn representative_samples() {
        let scores = vec![
            ("a".to_owned(), 0.1),
            ("b".to_owned(), 0.5),
            ("c".to_owned(), 0.9),
        ];
        let sel = select_representative_samples(&scores).unwrap();
        assert_eq!(sel[&BoxplotStat::Median], "b");
        assert_eq!(sel[&BoxplotStat::WhiskerLo], "a");
        assert_eq!(sel[&BoxplotStat::WhiskerHi], "c");
        assert_eq!(sel[&BoxplotStat::Mean], "b");
    }

    #[test]
    fn ties_pick_smallest_id() {
        let scores = vec![
            ("zeta".to_owned(), 0.4),
            ("alpha".to_owned(), 0.4),
            ("mid".to_owned(), 0.4),
        ];
        let sel = select_representative_samples(&scores).unwrap();
        assert!(sel.values().all(|id| id == "alpha"));
    }

    #[test]
    fn std_dev_uses_sample_denominator() {
        assert_eq!(std_dev(&[0.3]).unwrap(), 0.0);
        assert!((std_dev(&[0.0, 1.0]).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
    }
}
