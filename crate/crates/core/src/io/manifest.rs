//! Dataset manifests: JSON lists of `(id, score map, mask)` files.
//!
//! ```json
//! {"format_version": 1, "root": "data", "entries": [
//!     {"id": "good/000", "scores": "scores/000.npy", "mask": "masks/000.png"}
//! ]}
//! ```
//!
//! A relative `root` is taken relative to the manifest's directory, and
//! entry paths relative to the root. Score maps are resized to their mask's
//! resolution on load.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::raster::{load_mask, load_score_map, resize_scores};
use crate::data::{Dataset, Sample};
use crate::error::{Error, Result};

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub scores: PathBuf,
    pub mask: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    #[serde(default)]
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(root: impl Into<PathBuf>, entries: Vec<ManifestEntry>) -> Self {
        Self {
            format_version: MANIFEST_FORMAT_VERSION,
            root: root.into(),
            entries,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let manifest: Self =
            serde_path_to_error::deserialize(de).map_err(|e| Error::SchemaViolation {
                path: e.path().to_string(),
                message: e.inner().to_string(),
            })?;
        if manifest.format_version != MANIFEST_FORMAT_VERSION {
            return Err(Error::SchemaViolation {
                path: "format_version".into(),
                message: format!("unsupported version {}", manifest.format_version),
            });
        }
        let mut seen = HashSet::new();
        for e in &manifest.entries {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::DuplicateId { id: e.id.clone() });
            }
        }
        Ok(manifest)
    }

    /// Reads a manifest and anchors a relative root at the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest = Self::from_json(&text)?;
        if manifest.root.is_relative() {
            let base = path.parent().unwrap_or(Path::new(""));
            manifest.root = base.join(&manifest.root);
        }
        Ok(manifest)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn score_path(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.scores)
    }

    pub fn mask_path(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.mask)
    }

    pub fn entry(&self, id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Loads every entry (in parallel, order preserved).
    pub fn load_dataset(&self) -> Result<Dataset> {
        if self.entries.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let samples = self
            .entries
            .par_iter()
            .map(|e| self.load_sample(e))
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(samples)
    }

    pub fn load_sample(&self, entry: &ManifestEntry) -> Result<Sample> {
        let mask = load_mask(&self.mask_path(entry), &entry.id)?;
        let scores = load_score_map(&self.score_path(entry), &entry.id)?;
        let scores = resize_scores(&scores, mask.height(), mask.width());
        Sample::new(entry.id.clone(), scores, mask)
    }
}
