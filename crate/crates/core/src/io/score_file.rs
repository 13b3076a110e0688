//! Per-image AUPIMO score files.
//!
//! The schema is fixed and carries no version field. The reader tolerates
//! trailing commas before `]` or `}`, which hand-written files often have.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curves::AupimoResult;
use crate::error::{Error, Result};

pub const SHARED_FPR_METRIC: &str = "mean_perimage_fpr";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreFileRecord {
    pub shared_fpr_metric: String,
    pub fpr_lower_bound: f64,
    pub fpr_upper_bound: f64,
    /// Number of thresholds inside the integration range.
    pub num_threshs: usize,
    pub thresh_lower_bound: f64,
    pub thresh_upper_bound: f64,
    pub aupimos: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<Vec<String>>,
}

impl ScoreFileRecord {
    pub fn from_result(result: &AupimoResult, paths: Option<Vec<String>>) -> Result<Self> {
        let record = Self {
            shared_fpr_metric: SHARED_FPR_METRIC.to_owned(),
            fpr_lower_bound: result.fpr_lower_bound,
            fpr_upper_bound: result.fpr_upper_bound,
            num_threshs: result.num_threshs_effective,
            thresh_lower_bound: result.thresh_lower_bound,
            thresh_upper_bound: result.thresh_upper_bound,
            aupimos: result.scores.clone(),
            paths,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<()> {
        let violation = |path: &str, message: String| Error::SchemaViolation {
            path: path.to_owned(),
            message,
        };
        if self.shared_fpr_metric != SHARED_FPR_METRIC {
            return Err(violation(
                "shared_fpr_metric",
                format!("expected \"{SHARED_FPR_METRIC}\", got \"{}\"", self.shared_fpr_metric),
            ));
        }
        if !(self.fpr_lower_bound < self.fpr_upper_bound) {
            return Err(violation(
                "fpr_upper_bound",
                "must be greater than fpr_lower_bound".into(),
            ));
        }
        if !(self.thresh_lower_bound <= self.thresh_upper_bound) {
            return Err(violation(
                "thresh_upper_bound",
                "must not be less than thresh_lower_bound".into(),
            ));
        }
        if let Some(paths) = &self.paths {
            if paths.len() != self.aupimos.len() {
                return Err(violation(
                    "paths",
                    format!("{} paths for {} scores", paths.len(), self.aupimos.len()),
                ));
            }
        }
        Ok(())
    }

    /// Image ids: the paths when present, otherwise zero-padded indices.
    pub fn ids(&self) -> Vec<String> {
        match &self.paths {
            Some(paths) => paths.clone(),
            None => (0..self.aupimos.len()).map(|i| format!("{i:03}")).collect(),
        }
    }
}

/// Drops commas that are directly followed (modulo whitespace) by `]` or `}`.
fn strip_trailing_commas(text: &str) -> String {
    let bytes = text.as_bytes();
    let mut out = String::with_capacity(text.len());
    let mut in_string = false;
    let mut escaped = false;
    for (i, ch) in text.char_indices() {
        if in_string {
            if escaped {
                escaped = false;
            } else if ch == '\\' {
                escaped = true;
            } else if ch == '"' {
                in_string = false;
            }
        } else if ch == '"' {
            in_string = true;
        } else if ch == ',' {
            let next = bytes[i + 1..].iter().find(|b| !b.is_ascii_whitespace());
            if matches!(next, Some(b']' | b'}')) {
                continue;
            }
        }
        out.push(ch);
    }
    out
}

pub fn read_score_file(bytes: &[u8]) -> Result<ScoreFileRecord> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::SchemaViolation {
        path: ".".into(),
        message: e.to_string(),
    })?;
    let cleaned = strip_trailing_commas(text);
    let de = &mut serde_json::Deserializer::from_str(&cleaned);
    let record: ScoreFileRecord =
        serde_path_to_error::deserialize(de).map_err(|e| Error::SchemaViolation {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    record.validate()?;
    Ok(record)
}

pub fn write_score_file(record: &ScoreFileRecord) -> Result<Vec<u8>> {
    record.validate()?;
    let mut out = serde_json::to_vec_pretty(record).expect("record serializes");
    out.push(b'\n');
    Ok(out)
}

pub fn load_score_file(path: &Path) -> Result<ScoreFileRecord> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_score_file(&bytes)
}

pub fn save_score_file(path: &Path, record: &ScoreFileRecord) -> Result<()> {
    std::fs::write(path, write_score_file(record)?).map_err(|e| Error::io(path, e))
}
