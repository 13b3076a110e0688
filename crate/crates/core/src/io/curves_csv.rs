//! CSV export of threshold sweeps.

use std::path::Path;

use super::report::csv_error;
use crate::curves::{PimoCurve, RocProCurve};
use crate::error::{Error, Result};

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
}

/// One row per threshold: set FPR, set TPR and PRO.
pub fn roc_pro_csv(roc: &RocProCurve, pro: Option<&RocProCurve>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["threshold", "fpr", "tpr"];
    if pro.is_some() {
        header.push("pro");
    }
    w.write_record(&header).map_err(csv_error)?;
    for i in 0..roc.thresholds.len() {
        let mut row = vec![
            roc.thresholds[i].to_string(),
            roc.fpr[i].to_string(),
            roc.tpr[i].to_string(),
        ];
        if let Some(pro) = pro {
            row.push(pro.tpr[i].to_string());
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    Ok(finish(w))
}

/// One row per threshold: shared FPR, then each anomalous image's TPR.
pub fn pimo_csv(pimo: &PimoCurve) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["threshold".to_owned(), "shared_fpr".to_owned()];
    header.extend(pimo.anomalous_ids.iter().cloned());
    w.write_record(&header).map_err(csv_error)?;
    for (i, t) in pimo.grid.thresholds().iter().enumerate() {
        let mut row = vec![t.to_string(), pimo.shared_fpr[i].to_string()];
        row.extend(pimo.tpr.iter().map(|r| r[i].to_string()));
        w.write_record(&row).map_err(csv_error)?;
    }
    Ok(finish(w))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::pimo_curve;
    use crate::data::{assemble_dataset, GtMask, ScoreMap};
    use crate::grid::ThresholdGrid;

    #[test]
    fn pimo_layout() {
        let ds = assemble_dataset([
            ("n", ScoreMap::new("n", 1, 2, vec![0.1, 0.6]).unwrap(), GtMask::zeros(1, 2)),
            (
                "a",
                ScoreMap::new("a", 1, 2, vec![0.9, 0.2]).unwrap(),
                GtMask::new("a", 1, 2, vec![1, 0]).unwrap(),
            ),
        ])
        .unwrap();
        let grid = ThresholdGrid::explicit(vec![0.5, 0.8]).unwrap();
        let text = pimo_csv(&pimo_curve(&ds, &grid).unwrap()).unwrap();
        assert_eq!(text, "threshold,shared_fpr,a\n0.5,0.5,1\n0.8,0,1\n");
    }
}
