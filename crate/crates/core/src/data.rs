//! Raster types and dataset assembly.
//!
//! Score maps and masks are stored row-major. Once constructed they are
//! immutable, so a [`Dataset`] can be shared freely across worker threads.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// Dense per-pixel anomaly scores of one image. Higher means more anomalous.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl ScoreMap {
    /// Builds a score map, rejecting empty shapes and non-finite values.
    ///
    /// The id is only used to label errors.
    pub fn new(id: &str, height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || values.len() != height * width {
            return Err(Error::InvalidRaster { id: id.to_owned() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteScore { id: id.to_owned() });
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let values = (0..height)
            .flat_map(|r| (0..width).map(move |c| (r, c)))
            .map(|(r, c)| f(r, c))
            .collect();
        Self::new("<generated>", height, width, values)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// Applies `f` to every score. Fails if the result is not finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            "<mapped>",
            self.height,
            self.width,
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    /// (min, max) over all scores.
    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Dense per-pixel binary annotation: 0 is normal, 1 is anomalous.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GtMask {
    height: usize,
    width: usize,
    values: Vec<u8>,
}

impl GtMask {
    pub fn new(id: &str, height: usize, width: usize, values: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 || values.len() != height * width {
            return Err(Error::InvalidRaster { id: id.to_owned() });
        }
        if values.iter().any(|&v| v > 1) {
            return Err(Error::NonBinaryMask { id: id.to_owned() });
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        assert!(height > 0 && width > 0, "mask must be at least 1x1");
        Self {
            height,
            width,
            values: vec![0; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        assert!(height > 0 && width > 0, "mask must be at least 1x1");
        let values = (0..height)
            .flat_map(|r| (0..width).map(move |c| (r, c)))
            .map(|(r, c)| u8::from(f(r, c)))
            .collect();
        Self {
            height,
            width,
            values,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.values[row * self.width + col] == 1
    }

    pub fn num_anomalous(&self) -> usize {
        self.values.iter().filter(|&&v| v == 1).count()
    }

    pub fn is_normal(&self) -> bool {
        self.values.iter().all(|&v| v == 0)
    }

    /// Same mask with labels swapped.
    pub fn complement(&self) -> Self {
        Self {
            height: self.height,
            width: self.width,
            values: self.values.iter().map(|&v| 1 - v).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ImageClass {
    Normal,
    Anomalous,
}

/// One image: its scores, annotation, and the class derived from the annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    id: String,
    scores: ScoreMap,
    mask: GtMask,
    class: ImageClass,
}

impl Sample {
    pub fn new(id: impl Into<String>, scores: ScoreMap, mask: GtMask) -> Result<Self> {
        let id = id.into();
        if scores.height() != mask.height() || scores.width() != mask.width() {
            return Err(Error::DimensionMismatch { id });
        }
        let class = if mask.is_normal() {
            ImageClass::Normal
        } else {
            ImageClass::Anomalous
        };
        Ok(Self {
            id,
            scores,
            mask,
            class,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn scores(&self) -> &ScoreMap {
        &self.scores
    }

    pub fn mask(&self) -> &GtMask {
        &self.mask
    }

    pub fn class(&self) -> ImageClass {
        self.class
    }

    pub fn is_normal(&self) -> bool {
        self.class == ImageClass::Normal
    }

    pub fn height(&self) -> usize {
        self.scores.height()
    }

    pub fn width(&self) -> usize {
        self.scores.width()
    }

    /// Copy of this sample with a different annotation (e.g. a perturbed mask).
    pub fn with_mask(&self, mask: GtMask) -> Result<Self> {
        Sample::new(self.id.clone(), self.scores.clone(), mask)
    }

    pub fn with_scores(&self, scores: ScoreMap) -> Result<Self> {
        Sample::new(self.id.clone(), scores, self.mask.clone())
    }
}

/// Ordered collection of samples with unique ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(samples.len());
        for s in &samples {
            if !seen.insert(s.id()) {
                return Err(Error::DuplicateId {
                    id: s.id().to_owned(),
                });
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sample> {
        self.samples.iter()
    }

    pub fn normal(&self) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(|s| s.is_normal())
    }

    pub fn anomalous(&self) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(|s| !s.is_normal())
    }

    pub fn num_normal(&self) -> usize {
        self.normal().count()
    }

    pub fn num_anomalous(&self) -> usize {
        self.anomalous().count()
    }

    pub fn classes(&self) -> Vec<ImageClass> {
        self.samples.iter().map(Sample::class).collect()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.samples.iter().map(Sample::id).collect()
    }

    /// Applies `f` to every score of every sample.
    pub fn map_scores(&self, f: impl Fn(f64) -> f64 + Copy) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .map(|s| s.with_scores(s.scores().map(f)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { samples })
    }

    /// Keeps the samples for which `keep` returns true, preserving order.
    pub fn filter(&self, keep: impl Fn(&Sample) -> bool) -> Self {
        Self {
            samples: self.samples.iter().filter(|s| keep(s)).cloned().collect(),
        }
    }

    pub fn push(&mut self, sample: Sample) -> Result<()> {
        if self.samples.iter().any(|s| s.id() == sample.id()) {
            return Err(Error::DuplicateId {
                id: sample.id().to_owned(),
            });
        }
        self.samples.push(sample);
        Ok(())
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Sample;
    type IntoIter = std::slice::Iter<'a, Sample>;

    fn into_iter(self) -> Self::IntoIter {
        self.samples.iter()
    }
}

/// Builds a dataset from raw `(id, scores, mask)` triples.
///
/// Scores must be finite, masks must hold only 0/1 and match the score
/// map's shape. The image class is derived from the mask; input order is
/// preserved.
pub fn assemble_dataset<I, S>(pairs: I) -> Result<Dataset>
where
    I: IntoIterator<Item = (S, ScoreMap, GtMask)>,
    S: Into<String>,
{
    let samples = pairs
        .into_iter()
        .map(|(id, scores, mask)| Sample::new(id, scores, mask))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(samples)
}

/// Like [`assemble_dataset`] but from unchecked buffers, so that every
/// invariant violation is reported with the offending id.
pub fn assemble_from_buffers<I, S>(entries: I) -> Result<Dataset>
where
    I: IntoIterator<Item = (S, (usize, usize, Vec<f64>), (usize, usize, Vec<u8>))>,
    S: Into<String>,
{
    let samples = entries
        .into_iter()
        .map(|(id, (sh, sw, sv), (mh, mw, mv))| {
            let id = id.into();
            let scores = ScoreMap::new(&id, sh, sw, sv)?;
            let mask = GtMask::new(&id, mh, mw, mv)?;
            Sample::new(id, scores, mask)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(v: f64) -> ScoreMap {
        ScoreMap::new("s", 4, 4, vec![v; 16]).unwrap()
    }

    #[test]
    fn derives_classes_from_masks() {
        let mut hot = vec![0u8; 16];
        hot[5] = 1;
        let ds = assemble_dataset([
            ("normal", square(0.0), GtMask::zeros(4, 4)),
            ("anomalous", square(0.0), GtMask::new("a", 4, 4, hot).unwrap()),
        ])
        .unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.classes(), vec![ImageClass::Normal, ImageClass::Anomalous]);
    }

    #[test]
    fn rejects_non_binary_mask() {
        let mut values = vec![0u8; 16];
        values[3] = 2;
        let err = assemble_from_buffers([(
            "bad",
            (4, 4, vec![0.0; 16]),
            (4, 4, values),
        )])
        .unwrap_err();
        assert!(matches!(err, Error::NonBinaryMask { ref id } if id == "bad"));
    }

    #[test]
    fn rejects_non_finite_and_mismatched() {
        let err = assemble_from_buffers([("nan", (1, 2, vec![0.0, f64::NAN]), (1, 2, vec![0, 0]))])
            .unwrap_err();
        assert_eq!(err.code(), "NonFiniteScore");
        assert_eq!(err.sample_id(), Some("nan"));

        let err = assemble_dataset([("dim", square(0.0), GtMask::zeros(3, 4))]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { ref id } if id == "dim"));
    }

    #[test]
    fn keeps_listing_ids_in_order() {
        let ids = [
            "MVTec/bottle/test/broken_large/000.png",
            "MVTec/bottle/test/broken_large/001.png",
            "MVTec/bottle/test/broken_large/002.png",
        ];
        let ds = assemble_dataset(ids.iter().map(|id| (*id, square(0.5), GtMask::zeros(4, 4)))).unwrap();
        assert_eq!(ds.ids(), ids);
    }

    #[test]
    fn rejects_duplicate_ids() {
        let err = assemble_dataset([
            ("x", square(0.0), GtMask::zeros(4, 4)),
            ("x", square(1.0), GtMask::zeros(4, 4)),
        ])
        .unwrap_err();
        assert_eq!(err.code(), "DuplicateId");
    }

    #[test]
    fn round_trips_through_iteration() {
        let entries: Vec<_> = (0..3)
            .map(|i| {
                let scores = ScoreMap::from_fn(2, 3, |r, c| (i * 6 + r * 3 + c) as f64).unwrap();
                let mask = GtMask::from_fn(2, 3, |r, c| i > 0 && r == c);
                (format!("img{i}"), scores, mask)
            })
            .collect();
        let ds = assemble_dataset(entries.clone()).unwrap();
        for (sample, (id, scores, mask)) in ds.iter().zip(entries) {
            assert_eq!(sample.id(), id);
            assert_eq!(sample.scores(), &scores);
            assert_eq!(sample.mask(), &mask);
            assert_eq!(sample.is_normal(), mask.is_normal());
        }
    }
}
