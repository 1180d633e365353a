//! Configuration types and presets.
//!
//! Every stochastic operation threads an explicit seed so artifact files are
//! reproducible byte for byte. Presets capture the two preprocessing profiles
//! (dataset builds cap tokens at 25 characters, repository scans at 50) and
//! the two training profiles.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default seed for every stochastic operation.
pub const DEFAULT_SEED: u64 = 42;

/// Encoder window length: 512 input positions minus the two reserved ones.
pub const DEFAULT_WINDOW_SIZE: usize = 510;

/// Default dimension of the built-in hashing embedding backend.
pub const DEFAULT_EMBEDDING_DIM: usize = 256;

/// Token filter settings for the preprocessing pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    /// Tokens shorter than this are dropped.
    pub min_len: usize,
    /// Tokens longer than this are dropped.
    pub max_len: usize,
    /// Optional stoplist override, one word per line.
    pub stoplist_path: Option<PathBuf>,
}

impl PreprocessConfig {
    /// Profile used when building snippet datasets (max token length 25).
    pub fn dataset() -> Self {
        Self {
            min_len: 2,
            max_len: 25,
            stoplist_path: None,
        }
    }

    /// Profile used when scanning repository files (max token length 50).
    pub fn scan() -> Self {
        Self {
            min_len: 2,
            max_len: 50,
            stoplist_path: None,
        }
    }
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self::dataset()
    }
}

/// Hyper-parameters for training the dense classification head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub hidden_units: usize,
}

impl TrainConfig {
    /// Defaults for training only the head over frozen embeddings.
    pub fn head_only() -> Self {
        Self {
            epochs: 200,
            batch_size: 16,
            learning_rate: 1e-2,
            seed: DEFAULT_SEED,
            hidden_units: 32,
        }
    }

    /// The encoder fine-tuning settings, kept as a named preset for
    /// reference. They are far too conservative for head-only training.
    pub fn paper_finetune() -> Self {
        Self {
            epochs: 10,
            batch_size: 16,
            learning_rate: 2e-5,
            seed: DEFAULT_SEED,
            hidden_units: 32,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.hidden_units == 0 {
            return Err(Error::Config("hidden_units must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::head_only()
    }
}

/// Settings for the question-search client.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FetchConfig {
    pub api_base: String,
    pub max_pages: usize,
    pub page_size: usize,
    pub max_retries: usize,
    pub cache_dir: Option<PathBuf>,
}

impl Default for FetchConfig {
    fn default() -> Self {
        Self {
            api_base: "https://api.stackexchange.com/2.3".into(),
            max_pages: 25,
            page_size: 100,
            max_retries: 3,
            cache_dir: None,
        }
    }
}

/// Top-level configuration file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct AppConfig {
    pub seed: Option<u64>,
    pub window_size: Option<usize>,
    pub embedding_dim: Option<usize>,
    pub preprocess: PreprocessConfig,
    pub scan_preprocess: Option<PreprocessConfig>,
    pub fetch: FetchConfig,
    /// Named training presets; `head-only` and `paper-finetune` are built in.
    pub train: BTreeMap<String, TrainConfig>,
}

impl AppConfig {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn window_size(&self) -> usize {
        self.window_size.unwrap_or(DEFAULT_WINDOW_SIZE)
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding_dim.unwrap_or(DEFAULT_EMBEDDING_DIM)
    }

    pub fn scan_preprocess(&self) -> PreprocessConfig {
        self.scan_preprocess
            .clone()
            .unwrap_or_else(PreprocessConfig::scan)
    }

    /// Look up a training preset by name, falling back to the built-ins.
    pub fn train_preset(&self, name: &str) -> Result<TrainConfig> {
        if let Some(cfg) = self.train.get(name) {
            return Ok(cfg.clone());
        }
        match name {
            "head-only" => Ok(TrainConfig::head_only()),
            "paper-finetune" => Ok(TrainConfig::paper_finetune()),
            other => Err(Error::Config(format!("unknown training preset {other:?}"))),
        }
    }

    /// Load a TOML or JSON configuration file, chosen by extension.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let is_json = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            Ok(serde_json::from_str(&text)?)
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        }
    }
}
