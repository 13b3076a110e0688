//! Per-image score tables and average model ranks.

use std::collections::{BTreeMap, BTreeSet};

use super::wilcoxon::average_ranks_ascending;
use crate::error::{Error, Result};

/// Per-image scores of several models, keyed by model name then image id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairedScoreTable {
    models: Vec<String>,
    scores: BTreeMap<String, BTreeMap<String, f64>>,
}

impl PairedScoreTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds (or replaces) a model's scores. Model order is insertion order.
    pub fn insert_model<I, S>(&mut self, model: &str, scores: I)
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        if !self.scores.contains_key(model) {
            self.models.push(model.to_owned());
        }
        self.scores.insert(
            model.to_owned(),
            scores.into_iter().map(|(id, v)| (id.into(), v)).collect(),
        );
    }

    pub fn models(&self) -> &[String] {
        &self.models
    }

    pub fn scores(&self, model: &str) -> Result<&BTreeMap<String, f64>> {
        self.scores
            .get(model)
            .ok_or_else(|| Error::UnknownModel(model.to_owned()))
    }

    /// All image ids scored by at least one model.
    pub fn image_ids(&self) -> BTreeSet<&str> {
        self.scores
            .values()
            .flat_map(|m| m.keys().map(String::as_str))
            .collect()
    }

    /// Image ids scored by every model.
    pub fn common_ids(&self) -> BTreeSet<&str> {
        let mut it = self.scores.values();
        let Some(first) = it.next() else {
            return BTreeSet::new();
        };
        let mut common: BTreeSet<&str> = first.keys().map(String::as_str).collect();
        for m in it {
            common.retain(|id| m.contains_key(*id));
        }
        common
    }

    /// Restricts every model to the images all models share.
    pub fn intersection(&self) -> PairedScoreTable {
        let common = self.common_ids();
        let mut out = PairedScoreTable::new();
        for model in &self.models {
            let m = &self.scores[model];
            out.insert_model(
                model,
                common.iter().map(|&id| (id.to_owned(), m[id])),
            );
        }
        out
    }

    /// Scores of both models on the images both have scored, in id order.
    pub fn paired(&self, model_a: &str, model_b: &str) -> Result<(Vec<f64>, Vec<f64>)> {
        let a = self.scores(model_a)?;
        let b = self.scores(model_b)?;
        Ok(a.iter()
            .filter_map(|(id, &va)| b.get(id).map(|&vb| (va, vb)))
            .unzip())
    }
}

/// Ranks of `values` from 1 (highest) up, ties sharing their average rank.
pub fn descending_ranks(values: &[f64]) -> Vec<f64> {
    let negated: Vec<f64> = values.iter().map(|v| -v).collect();
    average_ranks_ascending(&negated)
}

/// Mean rank of each model over all images in the table (1 = best).
pub fn average_ranks(table: &PairedScoreTable) -> Result<Vec<(String, f64)>> {
    let models = table.models();
    if models.is_empty() {
        return Err(Error::EmptyScores);
    }
    let ids = table.image_ids();
    if ids.is_empty() {
        return Err(Error::EmptyScores);
    }
    let mut sums = vec![0.0; models.len()];
    for id in &ids {
        let row = models
            .iter()
            .map(|m| {
                table.scores[m]
                    .get(*id)
                    .copied()
                    .ok_or_else(|| Error::IncompleteTable {
                        model: m.clone(),
                        image: (*id).to_owned(),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        for (s, r) in sums.iter_mut().zip(descending_ranks(&row)) {
            *s += r;
        }
    }
    Ok(models
        .iter()
        .cloned()
        .zip(sums.into_iter().map(|s| s / ids.len() as f64))
        .collect())
}
