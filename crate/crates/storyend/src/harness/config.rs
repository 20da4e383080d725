//! Run configuration: one TOML file describes the corpus, the split, the
//! backends to generate with, and how candidates get scored. The
//! configuration's digest names the run, so editing the file starts a new
//! run instead of silently mixing regimes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backends::BackendConfig;
use crate::corpus::SplitSpec;
use crate::metrics::{MeteorParams, MetricConfig, TokenizerConfig};
use crate::net::RetryPolicy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSection {
    pub path: PathBuf,
}

/// Word-level language model used for perplexity scoring, fitted on the
/// train split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScorerSection {
    pub order: usize,
    pub alpha: f64,
}

impl Default for ScorerSection {
    fn default() -> Self {
        Self {
            order: 3,
            alpha: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsSection {
    pub bleu_max_n: usize,
    pub lowercase: bool,
    pub meteor: MeteorParams,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self {
            bleu_max_n: 4,
            lowercase: true,
            meteor: MeteorParams::default(),
        }
    }
}

impl MetricsSection {
    pub fn to_metric_config(&self) -> MetricConfig {
        MetricConfig {
            bleu_max_n: self.bleu_max_n,
            meteor: self.meteor,
            tokenizer: TokenizerConfig {
                lowercase: self.lowercase,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EmbedderSection {
    /// Deterministic bag-of-words one-hot vectors; needs no network.
    OneHot,
    /// OpenAI-compatible embeddings endpoint.
    Remote {
        endpoint: String,
        model: String,
        #[serde(default)]
        api_key_env: Option<String>,
        #[serde(default)]
        retry: RetryPolicy,
    },
}

impl Default for EmbedderSection {
    fn default() -> Self {
        Self::OneHot
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub corpus: CorpusSection,
    pub split: SplitSpec,
    #[serde(default)]
    pub scorer: ScorerSection,
    #[serde(default)]
    pub metrics: MetricsSection,
    #[serde(default)]
    pub embedder: EmbedderSection,
    #[serde(default, rename = "backend")]
    pub backends: Vec<BackendConfig>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, super::HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            super::HarnessError::Config(format!("could not read {}: {e}", path.display()))
        })?;
        Self::from_toml(&text)
            .map_err(|e| super::HarnessError::Config(format!("{}: {e}", path.display())))
    }

    /// Stable hex digest of the canonical JSON form; the first 12 hex
    /// characters name the run.
    pub fn run_id(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        let mut hex = String::with_capacity(12);
        for byte in digest.iter().take(6) {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }
}
