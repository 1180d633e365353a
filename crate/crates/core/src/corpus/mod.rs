//! Corpus construction: fetched questions, extracted snippets, review
//! bookkeeping, and balanced per-tactic datasets.

mod extract;
mod fetch;
mod review;

pub use extract::{build_unrelated_pool, extract_snippets, related_tag_union, MIN_SNIPPET_CHARS};
pub use fetch::{RawQuestion, SearchClient, API_KEY_ENV};
pub use review::{export_review, import_review};

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taxonomy::UNRELATED;

/// Sample-size bins for the related half of a dataset.
pub const SAMPLE_SIZE_BINS: [usize; 8] = [25, 50, 75, 100, 125, 150, 175, 200];

/// Smallest usable related-snippet count.
pub const MIN_RELATED: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReviewStatus {
    Pending,
    Accepted,
    Rejected,
}

/// One extracted code snippet with its provenance and review state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSnippet {
    pub id: String,
    pub source_question_id: u64,
    pub source_url: String,
    /// A tactic id, or `UNRELATED`.
    pub tactic_id: String,
    pub text: String,
    pub tags: BTreeSet<String>,
    pub review_status: ReviewStatus,
}

impl CodeSnippet {
    pub fn is_unrelated(&self) -> bool {
        self.tactic_id == UNRELATED
    }
}

/// Balanced dataset of one tactic: equally many related and unrelated
/// snippets, with the related count on a 25..200 step-25 bin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TacticDataset {
    pub tactic_id: String,
    pub related: Vec<CodeSnippet>,
    pub unrelated: Vec<CodeSnippet>,
    pub seed: u64,
}

impl TacticDataset {
    pub fn snippets(&self) -> impl Iterator<Item = &CodeSnippet> {
        self.related.iter().chain(self.unrelated.iter())
    }

    pub fn len(&self) -> usize {
        self.related.len() + self.unrelated.len()
    }

    pub fn is_empty(&self) -> bool {
        self.related.is_empty() && self.unrelated.is_empty()
    }

    /// Check balance, bin membership, id uniqueness and tag disjointness.
    pub fn validate(&self) -> Result<()> {
        if self.related.len() != self.unrelated.len() {
            return Err(Error::InvalidDataset(format!(
                "{} related vs {} unrelated snippets",
                self.related.len(),
                self.unrelated.len()
            )));
        }
        if !SAMPLE_SIZE_BINS.contains(&self.related.len()) {
            return Err(Error::InvalidDataset(format!(
                "related count {} is not one of {SAMPLE_SIZE_BINS:?}",
                self.related.len()
            )));
        }
        let mut ids = BTreeSet::new();
        for snippet in self.snippets() {
            if !ids.insert(&snippet.id) {
                return Err(Error::InvalidDataset(format!(
                    "duplicate snippet id {:?}",
                    snippet.id
                )));
            }
            if snippet.text.trim().is_empty() {
                return Err(Error::InvalidDataset(format!(
                    "snippet {:?} has empty text",
                    snippet.id
                )));
            }
        }
        let related_tags: BTreeSet<&String> =
            self.related.iter().flat_map(|s| &s.tags).collect();
        for snippet in &self.unrelated {
            for tag in &snippet.tags {
                if tag != "java" && related_tags.contains(tag) {
                    return Err(Error::InvalidDataset(format!(
                        "unrelated snippet {:?} shares tag {tag:?} with related snippets",
                        snippet.id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Write the dataset as JSONL, one snippet per line, related first.
    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        let mut file = fs::File::create(path)?;
        for snippet in self.snippets() {
            serde_json::to_writer(&mut file, snippet)?;
            file.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Read a dataset back from JSONL. The construction seed is not part of
    /// the file format, so it is reported as 0.
    pub fn load_jsonl(path: &Path) -> Result<Self> {
        let reader = BufReader::new(fs::File::open(path)?);
        let mut related = Vec::new();
        let mut unrelated = Vec::new();
        let mut tactic_id: Option<String> = None;
        for (index, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let snippet: CodeSnippet =
                serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
                    path: path.to_path_buf(),
                    line: index + 1,
                    message: e.to_string(),
                })?;
            if snippet.is_unrelated() {
                unrelated.push(snippet);
            } else {
                if let Some(existing) = &tactic_id {
                    if existing != &snippet.tactic_id {
                        return Err(Error::MalformedLine {
                            path: path.to_path_buf(),
                            line: index + 1,
                            message: format!(
                                "dataset mixes tactics {existing:?} and {:?}",
                                snippet.tactic_id
                            ),
                        });
                    }
                }
                tactic_id = Some(snippet.tactic_id.clone());
                related.push(snippet);
            }
        }
        Ok(Self {
            tactic_id: tactic_id.ok_or_else(|| {
                Error::InvalidDataset(format!("{}: no related snippets", path.display()))
            })?,
            related,
            unrelated,
            seed: 0,
        })
    }
}

/// Round an accepted-related count down to its sample-size bin.
pub fn normalize_sample_size(accepted_related_count: usize) -> Result<usize> {
    if accepted_related_count < MIN_RELATED {
        return Err(Error::TacticTooSmall {
            count: accepted_related_count,
            min: MIN_RELATED,
        });
    }
    Ok(SAMPLE_SIZE_BINS
        .iter()
        .rev()
        .find(|&&bin| bin <= accepted_related_count)
        .copied()
        .expect("bins start at the minimum"))
}

/// Assemble a balanced dataset by uniformly sampling the bin size from the
/// accepted related snippets and from the unrelated pool. Deterministic for
/// a fixed seed. Rejected snippets never enter the dataset.
pub fn assemble_dataset(
    tactic_id: &str,
    related: &[CodeSnippet],
    unrelated_pool: &[CodeSnippet],
    seed: u64,
) -> Result<TacticDataset> {
    let accepted: Vec<&CodeSnippet> = related
        .iter()
        .filter(|s| s.review_status == ReviewStatus::Accepted)
        .collect();
    let bin = normalize_sample_size(accepted.len())?;
    let usable_pool: Vec<&CodeSnippet> = unrelated_pool
        .iter()
        .filter(|s| s.review_status != ReviewStatus::Rejected)
        .collect();
    if usable_pool.len() < bin {
        return Err(Error::InsufficientUnrelated {
            needed: bin,
            available: usable_pool.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = |rng: &mut ChaCha8Rng, from: &[&CodeSnippet], n: usize| -> Vec<CodeSnippet> {
        let mut chosen: Vec<usize> = rand::seq::index::sample(rng, from.len(), n).into_vec();
        chosen.sort_unstable();
        chosen.into_iter().map(|i| from[i].clone()).collect()
    };
    let related_sample = pick(&mut rng, &accepted, bin);
    let unrelated_sample = pick(&mut rng, &usable_pool, bin);

    let dataset = TacticDataset {
        tactic_id: tactic_id.to_string(),
        related: related_sample,
        unrelated: unrelated_sample,
        seed,
    };
    dataset.validate()?;
    Ok(dataset)
}

#[cfg(test)]
pub(crate) fn test_snippet(id: &str, tactic_id: &str, text: &str) -> CodeSnippet {
    CodeSnippet {
        id: id.into(),
        source_question_id: 1,
        source_url: format!("https://example.org/q/{id}"),
        tactic_id: tactic_id.into(),
        text: text.into(),
        tags: BTreeSet::from(["java".to_string()]),
        review_status: ReviewStatus::Accepted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn snippets(prefix: &str, tactic: &str, n: usize) -> Vec<CodeSnippet> {
        (0..n)
            .map(|i| test_snippet(&format!("{prefix}{i}#0"), tactic, "int cipherText = 1;"))
            .collect()
    }

    #[test]
    fn binning_matches_reported_dataset_sizes() {
        assert_eq!(normalize_sample_size(56).unwrap(), 50);
        assert_eq!(normalize_sample_size(139).unwrap(), 125);
        assert_eq!(normalize_sample_size(25).unwrap(), 25);
        assert_eq!(normalize_sample_size(200).unwrap(), 200);
        assert_eq!(normalize_sample_size(5000).unwrap(), 200);
        assert!(matches!(
            normalize_sample_size(24),
            Err(Error::TacticTooSmall { count: 24, .. })
        ));
    }

    #[test]
    fn assemble_balances_and_is_deterministic() {
        let related = snippets("r", "aes", 56);
        let pool = snippets("u", UNRELATED, 500);
        let a = assemble_dataset("aes", &related, &pool, 7).unwrap();
        assert_eq!(a.related.len(), 50);
        assert_eq!(a.unrelated.len(), 50);
        a.validate().unwrap();

        let b = assemble_dataset("aes", &related, &pool, 7).unwrap();
        let ids = |d: &TacticDataset| -> Vec<String> {
            d.snippets().map(|s| s.id.clone()).collect()
        };
        assert_eq!(ids(&a), ids(&b));

        let c = assemble_dataset("aes", &related, &pool, 8).unwrap();
        assert_ne!(ids(&a), ids(&c), "different seeds almost surely differ");
    }

    #[test]
    fn assemble_needs_enough_unrelated() {
        let related = snippets("r", "aes", 56);
        let pool = snippets("u", UNRELATED, 10);
        assert!(matches!(
            assemble_dataset("aes", &related, &pool, 7),
            Err(Error::InsufficientUnrelated {
                needed: 50,
                available: 10
            })
        ));
    }

    #[test]
    fn assemble_counts_only_accepted_related() {
        let mut related = snippets("r", "aes", 30);
        for snippet in related.iter_mut().take(10) {
            snippet.review_status = ReviewStatus::Pending;
        }
        // 20 accepted is below the minimum
        let pool = snippets("u", UNRELATED, 100);
        assert!(matches!(
            assemble_dataset("aes", &related, &pool, 7),
            Err(Error::TacticTooSmall { count: 20, .. })
        ));
    }

    #[test]
    fn validate_rejects_tag_overlap() {
        let mut dataset = TacticDataset {
            tactic_id: "ldap".into(),
            related: snippets("r", "ldap", 25),
            unrelated: snippets("u", UNRELATED, 25),
            seed: 0,
        };
        dataset.related[0].tags.insert("ldap".into());
        dataset.validate().unwrap();
        dataset.unrelated[3].tags.insert("ldap".into());
        assert!(matches!(dataset.validate(), Err(Error::InvalidDataset(_))));
    }

    #[test]
    fn jsonl_round_trip_preserves_dataset() {
        let related = snippets("r", "aes", 56);
        let pool = snippets("u", UNRELATED, 120);
        let dataset = assemble_dataset("aes", &related, &pool, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("aes.jsonl");
        dataset.save_jsonl(&path).unwrap();
        let loaded = TacticDataset::load_jsonl(&path).unwrap();
        assert_eq!(loaded.tactic_id, "aes");
        assert_eq!(loaded.related, dataset.related);
        assert_eq!(loaded.unrelated, dataset.unrelated);
    }

    proptest! {
        #[test]
        fn bins_divide_by_25_and_never_exceed_the_count(count in 25usize..10_000) {
            let bin = normalize_sample_size(count).unwrap();
            prop_assert!(bin <= count);
            prop_assert_eq!(bin % 25, 0);
            prop_assert!(bin >= 25 && bin <= 200);
            // largest such bin
            if bin < 200 {
                prop_assert!(bin + 25 > count);
            }
        }
    }
}
