//! The Tactic Detector: an indicator-term classifier trained per tactic.
//!
//! Each vocabulary term is weighted by class coverage times class
//! specificity, `w(t) = (df_q(t) / N_q) * (df_q(t) / df(t))`, where `df_q`
//! counts related documents containing the term, `N_q` is the related
//! document count and `df` counts all documents containing it. A document
//! scores the mean weight of its distinct terms, and the decision threshold
//! is picked from the observed training scores to maximize training
//! F-measure.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TD_SCHEMA_VERSION: u32 = 1;

/// Fewest related / unrelated documents accepted for training.
pub const MIN_TRAIN_DOCS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdModel {
    pub schema_version: u32,
    pub tactic_id: String,
    pub threshold: f64,
    /// Indicator-term weights in [0, 1], sorted by term.
    pub term_weights: BTreeMap<String, f64>,
    pub vocab_size: usize,
}

impl TdModel {
    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let model: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        model.validate().map_err(|e| Error::InvalidModel {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        for (term, weight) in &self.term_weights {
            if !(0.0..=1.0).contains(weight) {
                return Err(Error::Config(format!(
                    "weight {weight} of term {term:?} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

fn distinct_terms(tokens: &[String]) -> BTreeSet<&str> {
    tokens.iter().map(String::as_str).collect()
}

/// Indicator weight of one term: class coverage times class specificity.
pub fn term_weight(df_related: usize, n_related: usize, df_all: usize) -> f64 {
    if n_related == 0 || df_all == 0 {
        return 0.0;
    }
    let coverage = df_related as f64 / n_related as f64;
    let specificity = df_related as f64 / df_all as f64;
    coverage * specificity
}

fn binary_f_measure(tp: usize, fp: usize, fn_: usize) -> f64 {
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fn_ == 0 {
        0.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Train a detector for one tactic from preprocessed documents.
pub fn td_train(
    tactic_id: &str,
    related: &[Vec<String>],
    unrelated: &[Vec<String>],
) -> Result<TdModel> {
    if related.len() < MIN_TRAIN_DOCS || unrelated.len() < MIN_TRAIN_DOCS {
        return Err(Error::TooFewDocuments {
            related: related.len(),
            unrelated: unrelated.len(),
            min_related: MIN_TRAIN_DOCS,
            min_unrelated: MIN_TRAIN_DOCS,
        });
    }

    let mut df_related: BTreeMap<&str, usize> = BTreeMap::new();
    let mut df_all: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in related {
        for term in distinct_terms(doc) {
            *df_related.entry(term).or_default() += 1;
            *df_all.entry(term).or_default() += 1;
        }
    }
    for doc in unrelated {
        for term in distinct_terms(doc) {
            *df_all.entry(term).or_default() += 1;
        }
    }
    if df_all.is_empty() {
        return Err(Error::EmptyVocabulary);
    }

    let term_weights: BTreeMap<String, f64> = df_related
        .iter()
        .map(|(&term, &dfq)| {
            (
                term.to_string(),
                term_weight(dfq, related.len(), df_all[term]),
            )
        })
        .collect();

    let mut model = TdModel {
        schema_version: TD_SCHEMA_VERSION,
        tactic_id: tactic_id.to_string(),
        threshold: 0.0,
        term_weights,
        vocab_size: df_all.len(),
    };

    // Threshold search over the observed training scores: maximize training
    // F-measure, ties resolved toward the lowest threshold.
    let related_scores: Vec<f64> = related.iter().map(|d| td_score(d, &model)).collect();
    let unrelated_scores: Vec<f64> = unrelated.iter().map(|d| td_score(d, &model)).collect();
    let mut candidates: Vec<f64> = related_scores
        .iter()
        .chain(&unrelated_scores)
        .copied()
        .collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let mut best = (f64::NEG_INFINITY, 0.0);
    for &threshold in &candidates {
        let tp = related_scores.iter().filter(|&&s| s >= threshold).count();
        let fn_ = related.len() - tp;
        let fp = unrelated_scores.iter().filter(|&&s| s >= threshold).count();
        let f = binary_f_measure(tp, fp, fn_);
        if f > best.0 {
            best = (f, threshold);
        }
    }
    model.threshold = best.1;
    Ok(model)
}

/// Mean indicator weight over the document's distinct terms; 0 for an empty
/// document. Repeating a token never changes the score.
pub fn td_score(tokens: &[String], model: &TdModel) -> f64 {
    let terms = distinct_terms(tokens);
    if terms.is_empty() {
        return 0.0;
    }
    let total: f64 = terms
        .iter()
        .map(|t| model.term_weights.get(*t).copied().unwrap_or(0.0))
        .sum();
    total / terms.len() as f64
}

/// Binary decision: related iff the score reaches the threshold.
pub fn td_predict_binary(tokens: &[String], model: &TdModel) -> bool {
    td_score(tokens, model) >= model.threshold
}

/// Pick the highest-scoring tactic; ties resolve to the lexicographically
/// smallest tactic id.
pub fn td_predict_multiclass(tokens: &[String], models: &[TdModel]) -> Result<(String, f64)> {
    let mut best: Option<(&str, f64)> = None;
    for model in models {
        let score = td_score(tokens, model);
        let better = match best {
            None => true,
            Some((id, s)) => score > s || (score == s && model.tactic_id.as_str() < id),
        };
        if better {
            best = Some((&model.tactic_id, score));
        }
    }
    best.map(|(id, score)| (id.to_string(), score))
        .ok_or(Error::EmptySample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    fn docs(list: &[&[&str]]) -> Vec<Vec<String>> {
        list.iter().map(|d| doc(d)).collect()
    }

    fn five_each(related_term: &str) -> (Vec<Vec<String>>, Vec<Vec<String>>) {
        let related: Vec<Vec<String>> = (0..5)
            .map(|i| doc(&[related_term, &format!("shared{i}")]))
            .collect();
        let unrelated: Vec<Vec<String>> = (0..5)
            .map(|i| doc(&[&format!("noise{i}"), &format!("shared{i}")]))
            .collect();
        (related, unrelated)
    }

    #[test]
    fn term_in_all_related_and_no_unrelated_weighs_one() {
        let (related, unrelated) = five_each("cipher");
        let model = td_train("t", &related, &unrelated).unwrap();
        assert_eq!(model.term_weights["cipher"], 1.0);
        // terms never seen in related documents carry no weight entry
        assert!(!model.term_weights.contains_key("noise0"));
        assert_eq!(td_score(&doc(&["noise0"]), &model), 0.0);
    }

    #[test]
    fn weight_formula_matches_hand_computation() {
        // df_q = 3 of N_q = 4 related docs, df = 3 overall: 0.75 * 1.0
        assert!((term_weight(3, 4, 3) - 0.75).abs() < 1e-12);
        // a term diluted across unrelated docs loses specificity
        assert!((term_weight(3, 4, 6) - 0.75 * 0.5).abs() < 1e-12);
        assert_eq!(term_weight(0, 4, 6), 0.0);

        // and the trained weights agree: "key" in 3 of 5 related docs only
        let related = docs(&[
            &["key", "alpha"],
            &["key", "beta"],
            &["key", "gamma"],
            &["delta"],
            &["epsilon"],
        ]);
        let unrelated = docs(&[
            &["zeta"],
            &["eta"],
            &["theta"],
            &["iota"],
            &["kappa"],
        ]);
        let model = td_train("t", &related, &unrelated).unwrap();
        assert!((model.term_weights["key"] - term_weight(3, 5, 3)).abs() < 1e-12);
    }

    #[test]
    fn score_is_mean_weight_over_distinct_terms() {
        let mut weights = BTreeMap::new();
        weights.insert("a".to_string(), 0.8);
        weights.insert("b".to_string(), 0.2);
        let model = TdModel {
            schema_version: TD_SCHEMA_VERSION,
            tactic_id: "t".into(),
            threshold: 0.5,
            term_weights: weights,
            vocab_size: 3,
        };
        assert!((td_score(&doc(&["a", "b", "c"]), &model) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(td_score(&doc(&["zz", "qq"]), &model), 0.0);
        assert_eq!(td_score(&[], &model), 0.0);
        // single full-weight term scores 1.0
        let mut full = BTreeMap::new();
        full.insert("only".to_string(), 1.0);
        let model = TdModel {
            term_weights: full,
            ..model
        };
        assert_eq!(td_score(&doc(&["only"]), &model), 1.0);
    }

    #[test]
    fn binary_decision_uses_threshold_inclusively() {
        let mut weights = BTreeMap::new();
        weights.insert("a".to_string(), 0.4);
        let model = TdModel {
            schema_version: TD_SCHEMA_VERSION,
            tactic_id: "t".into(),
            threshold: 0.4,
            term_weights: weights,
            vocab_size: 1,
        };
        assert!(td_predict_binary(&doc(&["a"]), &model)); // boundary score == theta
        assert!(!td_predict_binary(&doc(&["b"]), &model)); // score 0 < theta
    }

    #[test]
    fn planted_term_documents_classify_as_related() {
        let (related, unrelated) = five_each("ldapcontext");
        let model = td_train("ldap", &related, &unrelated).unwrap();
        assert!(td_predict_binary(&doc(&["ldapcontext", "search"]), &model));
        assert!(!td_predict_binary(&doc(&["widget", "paint"]), &model));
    }

    #[test]
    fn multiclass_argmax_and_tie_rule() {
        let model = |id: &str, term: &str| {
            let mut weights = BTreeMap::new();
            weights.insert(term.to_string(), 0.9);
            TdModel {
                schema_version: TD_SCHEMA_VERSION,
                tactic_id: id.into(),
                threshold: 0.5,
                term_weights: weights,
                vocab_size: 1,
            }
        };
        let models = vec![model("zeta", "zterm"), model("alpha", "aterm"), model("beta", "bterm")];
        let (winner, score) = td_predict_multiclass(&doc(&["zterm"]), &models).unwrap();
        assert_eq!(winner, "zeta");
        assert!((score - 0.9).abs() < 1e-12);
        // all scores zero -> smallest tactic id
        let (winner, score) = td_predict_multiclass(&doc(&["other"]), &models).unwrap();
        assert_eq!(winner, "alpha");
        assert_eq!(score, 0.0);
        assert!(td_predict_multiclass(&doc(&["x"]), &[]).is_err());
    }

    #[test]
    fn too_few_documents_or_empty_vocabulary_error() {
        let (related, unrelated) = five_each("term");
        assert!(matches!(
            td_train("t", &related[..4], &unrelated),
            Err(Error::TooFewDocuments { .. })
        ));
        let empties: Vec<Vec<String>> = (0..5).map(|_| Vec::new()).collect();
        assert!(matches!(
            td_train("t", &empties, &empties),
            Err(Error::EmptyVocabulary)
        ));
    }

    #[test]
    fn model_json_is_sorted_and_round_trips() {
        let (related, unrelated) = five_each("cipher");
        let model = td_train("t", &related, &unrelated).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("td.json");
        model.save(&path).unwrap();
        let loaded = TdModel::load(&path).unwrap();
        assert_eq!(model, loaded);
        let text = std::fs::read_to_string(&path).unwrap();
        let cipher_pos = text.find("\"cipher\"").unwrap();
        let shared_pos = text.find("\"shared0\"").unwrap();
        assert!(cipher_pos < shared_pos, "terms must serialize sorted");
    }

    proptest! {
        #[test]
        fn weights_stay_in_unit_interval_and_duplication_is_invariant(
            seed in 0u64..500,
            copies in 2usize..4,
        ) {
            use rand::prelude::*;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let vocab: Vec<String> = (0..12).map(|i| format!("w{i}")).collect();
            let mut make_doc = |extra: Option<&str>| -> Vec<String> {
                let mut d: Vec<String> = (0..rng.random_range(1usize..6))
                    .map(|_| vocab[rng.random_range(0..vocab.len())].clone())
                    .collect();
                if let Some(e) = extra {
                    d.push(e.to_string());
                }
                d
            };
            let related: Vec<Vec<String>> = (0..6).map(|_| make_doc(Some("planted"))).collect();
            let unrelated: Vec<Vec<String>> = (0..6).map(|_| make_doc(None)).collect();
            let model = td_train("t", &related, &unrelated).unwrap();
            for (term, w) in &model.term_weights {
                prop_assert!((0.0..=1.0).contains(w), "weight {w} of {term}");
            }
            prop_assert_eq!(model.term_weights["planted"], 1.0);

            // duplicating every document k times leaves ratio-based weights unchanged
            let dup = |docs: &[Vec<String>]| -> Vec<Vec<String>> {
                let mut out = Vec::new();
                for _ in 0..copies {
                    out.extend(docs.iter().cloned());
                }
                out
            };
            let dup_model = td_train("t", &dup(&related), &dup(&unrelated)).unwrap();
            prop_assert_eq!(model.term_weights.len(), dup_model.term_weights.len());
            for (term, w) in &model.term_weights {
                prop_assert!((w - dup_model.term_weights[term]).abs() < 1e-12);
            }
        }

        #[test]
        fn score_ignores_token_repetition(seed in 0u64..500) {
            use rand::prelude::*;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut weights = BTreeMap::new();
            for i in 0..8 {
                weights.insert(format!("w{i}"), rng.random_range(0.0..=1.0));
            }
            let model = TdModel {
                schema_version: TD_SCHEMA_VERSION,
                tactic_id: "t".into(),
                threshold: 0.5,
                term_weights: weights,
                vocab_size: 8,
            };
            let base: Vec<String> = (0..4).map(|i| format!("w{i}")).collect();
            let mut repeated = base.clone();
            for _ in 0..3 {
                repeated.push(base[rng.random_range(0..base.len())].clone());
            }
            let a = td_score(&base, &model);
            let b = td_score(&repeated, &model);
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }
}
