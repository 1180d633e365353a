//! Fixed-length windowing of long token sequences and mean pooling of the
//! per-window vectors.

use serde::{Deserialize, Serialize};

use crate::corpus::TacticDataset;
use crate::error::{Error, Result};
use crate::preprocess::Preprocessor;

pub use crate::config::DEFAULT_WINDOW_SIZE;

/// A token sequence cut into consecutive windows. Every window except
/// possibly the last holds exactly `window_size` items.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Windowed<T> {
    pub windows: Vec<Vec<T>>,
}

/// Windowing over token strings, the shape used by the snippet pipeline.
pub type WindowedSequence = Windowed<String>;

impl<T: Clone> Windowed<T> {
    /// Number of windows `m`; at least 1 even for an empty input.
    pub fn window_count(&self) -> usize {
        self.windows.len()
    }

    pub fn flatten(&self) -> Vec<T> {
        self.windows.iter().flatten().cloned().collect()
    }
}

/// Split a token sequence into windows of `window_size`.
///
/// An empty input maps to a single empty window so every snippet keeps a
/// representation.
pub fn window<T: Clone>(tokens: &[T], window_size: usize) -> Windowed<T> {
    assert!(window_size > 0, "window size must be positive");
    if tokens.is_empty() {
        return Windowed {
            windows: vec![Vec::new()],
        };
    }
    Windowed {
        windows: tokens.chunks(window_size).map(<[T]>::to_vec).collect(),
    }
}

/// Component-wise arithmetic mean of the given vectors.
pub fn mean_pool(vectors: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = vectors.first().ok_or(Error::EmptyVectorList)?;
    let dim = first.len();
    let mut out = vec![0.0; dim];
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: v.len(),
            });
        }
        for (acc, x) in out.iter_mut().zip(v) {
            *acc += x;
        }
    }
    let n = vectors.len() as f64;
    for acc in &mut out {
        *acc /= n;
    }
    Ok(out)
}

/// Window-count statistics of one dataset: cumulative percentage of snippets
/// fitting in at most 1..=4 windows, plus the maximum window count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthStatsRow {
    pub tactic_id: String,
    /// `s[k-1]` is the percentage of snippets with window count <= k.
    pub s: [f64; 4],
    pub smax: usize,
}

/// Compute window-count statistics per dataset over all of its snippets.
pub fn length_stats(
    datasets: &[TacticDataset],
    preprocessor: &Preprocessor,
    window_size: usize,
) -> Vec<LengthStatsRow> {
    datasets
        .iter()
        .map(|dataset| {
            let counts: Vec<usize> = dataset
                .snippets()
                .map(|snippet| {
                    let tokens = preprocessor.tokens(&snippet.text);
                    window(&tokens, window_size).window_count()
                })
                .collect();
            let total = counts.len();
            let mut s = [0.0; 4];
            if total > 0 {
                for (k, slot) in s.iter_mut().enumerate() {
                    let within = counts.iter().filter(|&&m| m <= k + 1).count();
                    *slot = 100.0 * within as f64 / total as f64;
                }
            }
            LengthStatsRow {
                tactic_id: dataset.tactic_id.clone(),
                s,
                smax: counts.iter().copied().max().unwrap_or(0),
            }
        })
        .collect()
}

/// Render the statistics as `tactic,S1,S2,S3,S4,SMax` CSV.
pub fn length_stats_csv(rows: &[LengthStatsRow]) -> String {
    let mut out = String::from("tactic,S1,S2,S3,S4,SMax\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.tactic_id, row.s[0], row.s[1], row.s[2], row.s[3], row.smax
        ));
    }
    out
}
