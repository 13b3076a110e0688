//! Synthetic annotation noise: tiny random blobs added to ground-truth masks.
//!
//! Blob statistics come from a [`TinyBlobTable`] (region sizes and regions
//! per image, bucketed, per category). The default profile is the column
//! average of the VisA table. Each blob is grown by a random walk from a
//! background seed pixel until it has exactly the sampled number of pixels.
//! Blobs never overlap or 8-touch existing anomalous pixels, so each one is
//! its own connected component in the output.

use std::path::Path;

use log::warn;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::GtMask;
use crate::error::{Error, Result};

/// Placement attempts per blob before it is skipped.
pub const MAX_PLACEMENT_RETRIES: usize = 100;

/// Upper end used for the open "6+" regions-per-image bucket.
pub const OPEN_COUNT_BUCKET_MAX: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub min: usize,
    pub max: usize,
    pub weight: f64,
}

impl Bucket {
    pub fn new(min: usize, max: usize, weight: f64) -> Self {
        Self { min, max, weight }
    }

    pub fn contains(&self, v: usize) -> bool {
        (self.min..=self.max).contains(&v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile {
    /// Blob size in pixels.
    pub size_buckets: Vec<Bucket>,
    /// Number of blobs added per image.
    pub count_buckets: Vec<Bucket>,
    pub seed: u64,
}

impl Default for NoiseProfile {
    fn default() -> Self {
        TinyBlobTable::visa().profile(0).expect("built-in table is valid")
    }
}

impl NoiseProfile {
    pub fn validate(&self) -> Result<()> {
        for (name, buckets) in [("size", &self.size_buckets), ("count", &self.count_buckets)] {
            if buckets.is_empty() {
                return Err(Error::InvalidProfile(format!("no {name} buckets")));
            }
            for b in buckets {
                if !(b.weight >= 0.0 && b.weight.is_finite()) {
                    return Err(Error::InvalidProfile(format!(
                        "{name} bucket {}-{} has weight {}",
                        b.min, b.max, b.weight
                    )));
                }
                if b.min > b.max || (name == "size" && b.min == 0) {
                    return Err(Error::InvalidProfile(format!(
                        "{name} bucket {}-{} is empty",
                        b.min, b.max
                    )));
                }
            }
            if buckets.iter().all(|b| b.weight == 0.0) {
                return Err(Error::InvalidProfile(format!("all {name} weights are zero")));
            }
        }
        Ok(())
    }

    /// Bucket frequencies normalized to sum to one.
    pub fn size_frequencies(&self) -> Vec<f64> {
        normalized(&self.size_buckets)
    }

    pub fn count_frequencies(&self) -> Vec<f64> {
        normalized(&self.count_buckets)
    }
}

fn normalized(buckets: &[Bucket]) -> Vec<f64> {
    let total: f64 = buckets.iter().map(|b| b.weight).sum();
    buckets.iter().map(|b| b.weight / total).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub name: String,
    pub sizes: Vec<f64>,
    pub counts: Vec<f64>,
}

/// Per-category tiny-blob counts. Bucket ranges are inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TinyBlobTable {
    pub format_version: u32,
    pub size_buckets: Vec<[usize; 2]>,
    pub count_buckets: Vec<[usize; 2]>,
    pub categories: Vec<CategoryRow>,
}

impl TinyBlobTable {
    pub const FORMAT_VERSION: u32 = 1;

    /// Tiny-blob statistics of the VisA dataset.
    pub fn visa() -> Self {
        #[rustfmt::skip]
        let rows: [(&str, [f64; 3], [f64; 2]); 12] = [
            ("Candle", [358.0, 98.0, 20.0], [5.0, 18.0]),
            ("Capsules", [8.0, 7.0, 3.0], [6.0, 1.0]),
            ("Cashew", [10.0, 0.0, 1.0], [5.0, 0.0]),
            ("Chewing Gum", [39.0, 1.0, 0.0], [6.0, 1.0]),
            ("Fryum", [158.0, 96.0, 22.0], [22.0, 13.0]),
            ("Macaroni 1", [114.0, 52.0, 14.0], [27.0, 10.0]),
            ("Macaroni 2", [123.0, 54.0, 6.0], [21.0, 8.0]),
            ("PCB 1", [19.0, 20.0, 9.0], [10.0, 2.0]),
            ("PCB 2", [11.0, 8.0, 4.0], [10.0, 1.0]),
            ("PCB 3", [20.0, 11.0, 0.0], [8.0, 1.0]),
            ("PCB 4", [32.0, 19.0, 12.0], [10.0, 5.0]),
            ("Pipe Fryum", [44.0, 34.0, 9.0], [17.0, 3.0]),
        ];
        Self {
            format_version: Self::FORMAT_VERSION,
            size_buckets: vec![[1, 9], [10, 19], [20, 29]],
            count_buckets: vec![[1, 5], [6, OPEN_COUNT_BUCKET_MAX]],
            categories: rows
                .iter()
                .map(|(name, sizes, counts)| CategoryRow {
                    name: (*name).to_owned(),
                    sizes: sizes.to_vec(),
                    counts: counts.to_vec(),
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != Self::FORMAT_VERSION {
            return Err(Error::InvalidProfile(format!(
                "unsupported format_version {}",
                self.format_version
            )));
        }
        if self.categories.is_empty() {
            return Err(Error::InvalidProfile("no categories".into()));
        }
        for row in &self.categories {
            if row.sizes.len() != self.size_buckets.len()
                || row.counts.len() != self.count_buckets.len()
            {
                return Err(Error::InvalidProfile(format!(
                    "row `{}` does not match the bucket layout",
                    row.name
                )));
            }
        }
        Ok(())
    }

    /// Column average over all categories.
    pub fn profile(&self, seed: u64) -> Result<NoiseProfile> {
        self.validate()?;
        let n = self.categories.len() as f64;
        let column = |ranges: &[[usize; 2]], pick: fn(&CategoryRow) -> &[f64]| -> Vec<Bucket> {
            ranges
                .iter()
                .enumerate()
                .map(|(j, &[min, max])| {
                    let total: f64 = self.categories.iter().map(|r| pick(r)[j]).sum();
                    Bucket::new(min, max, total / n)
                })
                .collect()
        };
        let profile = NoiseProfile {
            size_buckets: column(&self.size_buckets, |r| &r.sizes),
            count_buckets: column(&self.count_buckets, |r| &r.counts),
            seed,
        };
        profile.validate()?;
        Ok(profile)
    }

    /// Profile of a single category.
    pub fn category_profile(&self, name: &str, seed: u64) -> Result<NoiseProfile> {
        let row = self
            .categories
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| Error::InvalidProfile(format!("unknown category `{name}`")))?;
        let single = TinyBlobTable {
            categories: vec![row.clone()],
            ..self.clone()
        };
        single.profile(seed)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let table: Self = serde_path_to_error::deserialize(de).map_err(|e| Error::SchemaViolation {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        table.validate()?;
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }
}

/// One blob added to a mask.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBlob {
    /// Flat (row-major) pixel indices.
    pub pixels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyMask {
    pub mask: GtMask,
    pub blobs: Vec<NoiseBlob>,
    /// Blob sizes that could not be placed within the retry budget.
    pub skipped: Vec<usize>,
}

impl NoisyMask {
    pub fn placement_exhausted(&self) -> bool {
        !self.skipped.is_empty()
    }
}

fn rng_for(profile_seed: u64, rng_seed: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&profile_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&rng_seed.to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}

fn sample_bucket(buckets: &[Bucket], rng: &mut ChaCha8Rng) -> usize {
    let idx = WeightedIndex::new(buckets.iter().map(|b| b.weight))
        .expect("validated weights")
        .sample(rng);
    let b = buckets[idx];
    rng.random_range(b.min..=b.max)
}

/// Pixels a new blob may occupy: not anomalous and not 8-adjacent to anything anomalous.
struct Occupancy {
    height: usize,
    width: usize,
    taken: Vec<bool>,
}

impl Occupancy {
    fn neighbors8(&self, p: usize) -> impl Iterator<Item = usize> + '_ {
        let (r, c) = ((p / self.width) as isize, (p % self.width) as isize);
        (-1isize..=1).flat_map(move |dr| {
            (-1isize..=1).filter_map(move |dc| {
                let (nr, nc) = (r + dr, c + dc);
                (nr >= 0 && nc >= 0 && (nr as usize) < self.height && (nc as usize) < self.width)
                    .then(|| nr as usize * self.width + nc as usize)
            })
        })
    }

    fn free(&self, p: usize) -> bool {
        self.neighbors8(p).all(|q| !self.taken[q])
    }

    fn step(&self, p: usize, dir: u32) -> Option<usize> {
        let (r, c) = (p / self.width, p % self.width);
        match dir {
            0 if r > 0 => Some(p - self.width),
            1 if r + 1 < self.height => Some(p + self.width),
            2 if c > 0 => Some(p - 1),
            3 if c + 1 < self.width => Some(p + 1),
            _ => None,
        }
    }

    /// Grows a blob of exactly `size` pixels from a random background seed.
    fn grow(&self, size: usize, background: &[usize], rng: &mut ChaCha8Rng) -> Option<Vec<usize>> {
        let start = background[rng.random_range(0..background.len())];
        if !self.free(start) {
            return None;
        }
        let mut blob = vec![start];
        let mut pos = start;
        let max_steps = 50 * size + 50;
        for _ in 0..max_steps {
            if blob.len() == size {
                break;
            }
            let Some(next) = self.step(pos, rng.random_range(0..4)) else {
                continue;
            };
            if blob.contains(&next) {
                pos = next;
            } else if self.free(next) {
                blob.push(next);
                pos = next;
            }
        }
        (blob.len() == size).then_some(blob)
    }
}

/// Adds random tiny blobs to an anomalous mask.
///
/// The draw is a pure function of `(mask, profile, rng_seed)`.
pub fn synthesize_noisy_mask(
    id: &str,
    mask: &GtMask,
    profile: &NoiseProfile,
    rng_seed: u64,
) -> Result<NoisyMask> {
    profile.validate()?;
    if mask.is_normal() {
        return Err(Error::NotAnAnomalousImage { id: id.to_owned() });
    }
    let mut rng = rng_for(profile.seed, rng_seed);
    let count = sample_bucket(&profile.count_buckets, &mut rng);
    let sizes: Vec<usize> = (0..count)
        .map(|_| sample_bucket(&profile.size_buckets, &mut rng))
        .collect();

    let (height, width) = (mask.height(), mask.width());
    let background: Vec<usize> = (0..height * width).filter(|&p| mask.values()[p] == 0).collect();
    if sizes.iter().sum::<usize>() >= background.len() {
        return Err(Error::InsufficientBackground { id: id.to_owned() });
    }

    let mut occ = Occupancy {
        height,
        width,
        taken: mask.values().iter().map(|&v| v != 0).collect(),
    };
    let mut blobs = Vec::with_capacity(sizes.len());
    let mut skipped = Vec::new();
    for size in sizes {
        let placed = (0..MAX_PLACEMENT_RETRIES).find_map(|_| occ.grow(size, &background, &mut rng));
        match placed {
            Some(pixels) => {
                for &p in &pixels {
                    occ.taken[p] = true;
                }
                blobs.push(NoiseBlob { pixels });
            }
            None => skipped.push(size),
        }
    }
    if !skipped.is_empty() {
        warn!(
            "sample `{id}`: could not place {} noise blob(s) after {MAX_PLACEMENT_RETRIES} attempts",
            skipped.len()
        );
    }
    let values = occ.taken.iter().map(|&t| t as u8).collect();
    let mask = GtMask::new(id, height, width, values)?;
    Ok(NoisyMask {
        mask,
        blobs,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn anomalous_mask(h: usize, w: usize) -> GtMask {
        GtMask::from_fn(h, w, |r, c| r < 2 && c < 2)
    }

    fn forced(size: usize, count: usize) -> NoiseProfile {
        NoiseProfile {
            size_buckets: vec![Bucket::new(size, size, 1.0)],
            count_buckets: vec![Bucket::new(count, count, 1.0)],
            seed: 7,
        }
    }

    #[test]
    fn single_pixel_single_blob() {
        let mask = anomalous_mask(16, 16);
        let out = synthesize_noisy_mask("m", &mask, &forced(1, 1), 3).unwrap();
        assert_eq!(out.mask.num_anomalous(), mask.num_anomalous() + 1);
        assert_eq!(out.blobs.len(), 1);
        assert!(!out.placement_exhausted());
    }

    #[test]
    fn deterministic_and_additive() {
        let mask = anomalous_mask(64, 64);
        let profile = NoiseProfile::default();
        let a = synthesize_noisy_mask("m", &mask, &profile, 11).unwrap();
        let b = synthesize_noisy_mask("m", &mask, &profile, 11).unwrap();
        assert_eq!(a, b);
        for p in 0..64 * 64 {
            assert!(a.mask.values()[p] >= mask.values()[p]);
        }
        for blob in &a.blobs {
            assert!((1..=29).contains(&blob.pixels.len()));
        }
    }

    #[test]
    fn normal_mask_rejected() {
        let err = synthesize_noisy_mask("n", &GtMask::zeros(8, 8), &forced(1, 1), 0).unwrap_err();
        assert!(matches!(err, Error::NotAnAnomalousImage { .. }));
    }

    #[test]
    fn tiny_canvas_has_insufficient_background() {
        let mask = GtMask::from_fn(3, 3, |r, c| r == 1 && c == 1);
        let err = synthesize_noisy_mask("t", &mask, &forced(9, 1), 0).unwrap_err();
        assert!(matches!(err, Error::InsufficientBackground { .. }));
    }

    #[test]
    fn crowded_canvas_skips_blobs() {
        // Everything within reach of the anomaly is blocked by the 8-neighbor rule.
        let mask = GtMask::from_fn(3, 3, |r, c| r == 1 && c == 1);
        let out = synthesize_noisy_mask("t", &mask, &forced(1, 1), 0).unwrap();
        assert_eq!(out.skipped, vec![1]);
        assert_eq!(out.mask, mask);
    }

    #[test]
    fn visa_profile_is_the_column_average() {
        let p = NoiseProfile::default();
        let sizes: Vec<f64> = p.size_buckets.iter().map(|b| b.weight).collect();
        assert_eq!(sizes, vec![936.0 / 12.0, 400.0 / 12.0, 100.0 / 12.0]);
        let counts: Vec<f64> = p.count_buckets.iter().map(|b| b.weight).collect();
        assert_eq!(counts, vec![147.0 / 12.0, 63.0 / 12.0]);
        assert_eq!(p.count_buckets[1], Bucket::new(6, 10, 63.0 / 12.0));
    }

    #[test]
    fn table_json_round_trip() {
        let table = TinyBlobTable::visa();
        let back = TinyBlobTable::from_json(&table.to_json()).unwrap();
        assert_eq!(back, table);
        let candle = table.category_profile("Candle", 0).unwrap();
        assert_eq!(candle.size_buckets[0].weight, 358.0);
        assert_eq!(candle.count_buckets[1].weight, 18.0);
    }

    #[test]
    fn schema_errors_carry_a_path() {
        let err = TinyBlobTable::from_json(r#"{"format_version": 1, "size_buckets": [[1, "x"]]}"#)
            .unwrap_err();
        match err {
            Error::SchemaViolation { path, .. } => assert!(path.starts_with("size_buckets")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_profiles() {
        let mut p = forced(1, 1);
        p.size_buckets[0].weight = 0.0;
        assert!(matches!(p.validate(), Err(Error::InvalidProfile(_))));
        let mut p = forced(1, 1);
        p.size_buckets[0].weight = -1.0;
        assert!(p.validate().is_err());
    }
}
