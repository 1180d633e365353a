//! Stratified fold assignment and random oversampling.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A class-stratified partition of sample ids into `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: BTreeMap<String, usize>,
    pub seed: u64,
}

impl FoldPlan {
    /// Ids held out by the given fold, in id order.
    pub fn test_ids(&self, fold: usize) -> Vec<&str> {
        self.assignments
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    /// Ids trained on by the given fold, in id order.
    pub fn train_ids(&self, fold: usize) -> Vec<&str> {
        self.assignments
            .iter()
            .filter(|(_, &f)| f != fold)
            .map(|(id, _)| id.as_str())
            .collect()
    }
}

/// Assign each `(id, class)` pair to one of `k` folds so class proportions
/// match across folds: per class and fold the count deviates from
/// `ceil(n_class / k)` by at most one.
pub fn stratified_folds(labels: &[(String, String)], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    let mut by_class: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (id, class) in labels {
        by_class.entry(class).or_default().push(id);
    }
    for (class, ids) in &by_class {
        if ids.len() < k {
            return Err(Error::ClassTooSmall {
                class: (*class).to_string(),
                size: ids.len(),
                k,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = BTreeMap::new();
    for ids in by_class.values_mut() {
        ids.shuffle(&mut rng);
        // rotating start spreads the remainder across folds instead of
        // always growing fold 0
        let start = rng.random_range(0..k);
        for (index, id) in ids.iter().enumerate() {
            assignments.insert((*id).to_string(), (start + index) % k);
        }
    }
    Ok(FoldPlan {
        k,
        assignments,
        seed,
    })
}

/// Duplicate minority-class ids uniformly at random until every class
/// matches the majority count. All originals are retained; duplicates are
/// appended.
pub fn oversample(
    train_ids: &[String],
    labels: &BTreeMap<String, String>,
    seed: u64,
) -> Result<Vec<String>> {
    if train_ids.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut by_class: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for id in train_ids {
        let class = labels
            .get(id)
            .ok_or_else(|| Error::UnknownSnippet { id: id.clone() })?;
        by_class.entry(class).or_default().push(id);
    }
    let target = by_class.values().map(Vec::len).max().unwrap_or(0);
    let mut out: Vec<String> = train_ids.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for ids in by_class.values() {
        for _ in ids.len()..target {
            out.push(ids[rng.random_range(0..ids.len())].to_string());
        }
    }
    Ok(out)
}
