//! Embedding backends and the pooled snippet representation.
//!
//! Backends are pluggable: the built-in hashing backend is deterministic and
//! needs no external model, while the file backend serves precomputed
//! per-window vectors (for example from a frozen encoder) keyed by snippet id
//! and window index.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use crate::chunking::{mean_pool, window};
use crate::error::{Error, Result};

/// A pooled or per-window representation.
pub type EmbeddingVector = Vec<f64>;

/// Identifies one window of one snippet, the lookup key of precomputed
/// embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowRef<'a> {
    pub snippet_id: &'a str,
    pub window_index: usize,
}

/// Maps a token window to a fixed-dimension vector.
pub trait EmbeddingBackend {
    fn name(&self) -> &str;
    fn dimension(&self) -> usize;
    fn embed_window(&self, window: WindowRef<'_>, tokens: &[String]) -> Result<EmbeddingVector>;
}

/// Smallest dimension the hashing backend accepts.
pub const MIN_HASHING_DIM: usize = 16;

const BUCKET_SEED: u64 = 0xcbf2_9ce4_8422_2325;
const SIGN_SEED: u64 = 0x9e37_79b9_7f4a_7c15;

// FNV-1a; hand-rolled so hashes are stable across Rust releases, which the
// byte-identical-artifacts contract depends on.
fn fnv1a(bytes: &[u8], seed: u64) -> u64 {
    let mut hash = seed;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Signed feature hashing over window tokens, L2-normalized.
#[derive(Debug, Clone)]
pub struct HashingBackend {
    dimension: usize,
}

impl HashingBackend {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension < MIN_HASHING_DIM {
            return Err(Error::Config(format!(
                "hashing backend dimension must be at least {MIN_HASHING_DIM}, got {dimension}"
            )));
        }
        Ok(Self { dimension })
    }
}

impl Default for HashingBackend {
    fn default() -> Self {
        Self {
            dimension: crate::config::DEFAULT_EMBEDDING_DIM,
        }
    }
}

impl EmbeddingBackend for HashingBackend {
    fn name(&self) -> &str {
        "hashing"
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_window(&self, _window: WindowRef<'_>, tokens: &[String]) -> Result<EmbeddingVector> {
        let mut values = vec![0.0; self.dimension];
        for token in tokens {
            let bucket = (fnv1a(token.as_bytes(), BUCKET_SEED) % self.dimension as u64) as usize;
            let sign = if fnv1a(token.as_bytes(), SIGN_SEED) & 1 == 0 {
                1.0
            } else {
                -1.0
            };
            values[bucket] += sign;
        }
        let norm = values.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut values {
                *x /= norm;
            }
        }
        Ok(values)
    }
}

#[derive(Deserialize)]
struct FileEntry {
    snippet_id: String,
    window_index: usize,
    vector: Vec<f64>,
}

/// Precomputed per-window embeddings loaded from a JSONL file.
#[derive(Debug, Clone)]
pub struct FileBackend {
    dimension: usize,
    vectors: HashMap<(String, usize), EmbeddingVector>,
}

impl FileBackend {
    /// Load `{snippet_id, window_index, vector}` lines. Every vector must
    /// share one dimension; the offending line is named otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        let reader = BufReader::new(fs::File::open(path)?);
        let mut dimension = None;
        let mut vectors = HashMap::new();
        for (index, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: FileEntry =
                serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
                    path: path.to_path_buf(),
                    line: index + 1,
                    message: e.to_string(),
                })?;
            match dimension {
                None => dimension = Some(entry.vector.len()),
                Some(d) if d != entry.vector.len() => {
                    return Err(Error::MalformedLine {
                        path: path.to_path_buf(),
                        line: index + 1,
                        message: format!(
                            "vector dimension {} differs from {d}",
                            entry.vector.len()
                        ),
                    });
                }
                Some(_) => {}
            }
            vectors.insert((entry.snippet_id, entry.window_index), entry.vector);
        }
        let dimension = dimension.ok_or_else(|| Error::InvalidModel {
            path: path.to_path_buf(),
            message: "embedding file holds no vectors".into(),
        })?;
        Ok(Self { dimension, vectors })
    }
}

impl EmbeddingBackend for FileBackend {
    fn name(&self) -> &str {
        "file"
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_window(&self, window: WindowRef<'_>, _tokens: &[String]) -> Result<EmbeddingVector> {
        self.vectors
            .get(&(window.snippet_id.to_string(), window.window_index))
            .cloned()
            .ok_or_else(|| Error::MissingEmbedding {
                snippet_id: window.snippet_id.to_string(),
                window_index: window.window_index,
            })
    }
}

/// Pooled representation of a whole snippet: embed each window, then take
/// the component-wise mean.
pub fn represent(
    snippet_id: &str,
    tokens: &[String],
    window_size: usize,
    backend: &dyn EmbeddingBackend,
) -> Result<EmbeddingVector> {
    let windowed = window(tokens, window_size);
    let vectors: Vec<EmbeddingVector> = windowed
        .windows
        .iter()
        .enumerate()
        .map(|(index, window_tokens)| {
            backend.embed_window(
                WindowRef {
                    snippet_id,
                    window_index: index,
                },
                window_tokens,
            )
        })
        .collect::<Result<_>>()?;
    mean_pool(&vectors)
}
