//! Token embedding providers and vector similarity.
//!
//! [`bert_score`](crate::metrics::bert_score) only needs a way to turn
//! tokens into equal-length vectors; [`EmbeddingProvider`] is that seam.
//! [`OneHotEmbedder`] is the self-contained implementation used in tests
//! and offline runs; [`RemoteEmbeddingProvider`] talks to a chat-API
//! compatible embeddings endpoint, one token per request, with memoization
//! and an audit log.

use std::collections::HashMap;
use std::sync::Mutex;

use serde_json::json;

use crate::net::{post_json_with_retry, ExchangeLog, NetError, RetryPolicy};

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("cannot embed an empty token list")]
    EmptyInput,
    #[error("vector dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("non-finite component in embedding for token {token:?}")]
    NonFinite { token: String },
    #[error("embedding endpoint: {0}")]
    Remote(#[from] NetError),
    #[error("embedding response missing data[0].embedding")]
    MalformedResponse,
}

/// One vector per token position, all the same dimension, all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub tokens: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
}

impl EmbeddingMatrix {
    pub fn new(tokens: Vec<String>, vectors: Vec<Vec<f64>>) -> Result<Self, EmbeddingError> {
        assert_eq!(tokens.len(), vectors.len(), "one vector per token");
        if tokens.is_empty() {
            return Err(EmbeddingError::EmptyInput);
        }
        let dim = vectors[0].len();
        for (token, v) in tokens.iter().zip(&vectors) {
            if v.len() != dim {
                return Err(EmbeddingError::DimensionMismatch {
                    left: dim,
                    right: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(EmbeddingError::NonFinite {
                    token: token.clone(),
                });
            }
        }
        Ok(Self { tokens, vectors })
    }

    pub fn dimension(&self) -> usize {
        self.vectors.first().map_or(0, |v| v.len())
    }
}

pub trait EmbeddingProvider: Send + Sync {
    /// Embeds each token in order. `tokens` must be non-empty.
    fn embed_tokens(&self, tokens: &[String]) -> Result<EmbeddingMatrix, EmbeddingError>;
}

/// Cosine similarity. Zero vectors yield 0; the result is clamped to
/// [-1, 1] so accumulated rounding never leaks out of range.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, EmbeddingError> {
    if u.len() != v.len() {
        return Err(EmbeddingError::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// Test embedder: each distinct token becomes a one-hot vector over the
/// session vocabulary in first-seen order. Equal tokens get identical
/// vectors, distinct tokens orthogonal ones. The vocabulary grows across
/// calls; within a call every vector has the vocabulary's current size.
#[derive(Debug, Default)]
pub struct OneHotEmbedder {
    vocab: Mutex<Vec<String>>,
}

impl EmbeddingProvider for OneHotEmbedder {
    fn embed_tokens(&self, tokens: &[String]) -> Result<EmbeddingMatrix, EmbeddingError> {
        if tokens.is_empty() {
            return Err(EmbeddingError::EmptyInput);
        }
        let mut vocab = self.vocab.lock().expect("embedder lock");
        let mut indices = Vec::with_capacity(tokens.len());
        for token in tokens {
            let ix = match vocab.iter().position(|t| t == token) {
                Some(ix) => ix,
                None => {
                    vocab.push(token.clone());
                    vocab.len() - 1
                }
            };
            indices.push(ix);
        }
        let dim = vocab.len();
        let vectors = indices
            .into_iter()
            .map(|ix| {
                let mut v = vec![0.0; dim];
                v[ix] = 1.0;
                v
            })
            .collect();
        EmbeddingMatrix::new(tokens.to_vec(), vectors)
    }
}

#[derive(Debug, Clone)]
pub struct RemoteEmbeddingConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token; `None`
    /// sends no Authorization header.
    pub api_key_env: Option<String>,
    pub retry: RetryPolicy,
}

/// Embeddings over HTTP, one token per request. Identical tokens are
/// served from an in-memory cache, so a token costs at most one call per
/// provider lifetime. Every call is archived to the exchange log.
pub struct RemoteEmbeddingProvider {
    config: RemoteEmbeddingConfig,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    cache: Mutex<HashMap<String, Vec<f64>>>,
    log: Option<std::sync::Arc<ExchangeLog>>,
}

impl RemoteEmbeddingProvider {
    pub fn new(
        config: RemoteEmbeddingConfig,
        log: Option<std::sync::Arc<ExchangeLog>>,
    ) -> Result<Self, EmbeddingError> {
        let api_key = match &config.api_key_env {
            Some(var) => Some(
                std::env::var(var)
                    .map_err(|_| NetError::Credential(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        Ok(Self {
            config,
            api_key,
            client: reqwest::blocking::Client::new(),
            cache: Mutex::new(HashMap::new()),
            log,
        })
    }

    fn fetch(&self, token: &str) -> Result<Vec<f64>, EmbeddingError> {
        let request = json!({ "model": self.config.model, "input": token });
        let (response, _attempts) = post_json_with_retry(
            &self.client,
            &self.config.endpoint,
            self.api_key.as_deref(),
            &request,
            &self.config.retry,
            self.log.as_deref().map(|l| (l, "embedding")),
        )?;
        let components = response
            .pointer("/data/0/embedding")
            .and_then(|v| v.as_array())
            .ok_or(EmbeddingError::MalformedResponse)?;
        let mut vector = Vec::with_capacity(components.len());
        for c in components {
            let x = c.as_f64().ok_or(EmbeddingError::MalformedResponse)?;
            if !x.is_finite() {
                return Err(EmbeddingError::NonFinite {
                    token: token.to_string(),
                });
            }
            vector.push(x);
        }
        if vector.is_empty() {
            return Err(EmbeddingError::MalformedResponse);
        }
        Ok(vector)
    }
}

impl EmbeddingProvider for RemoteEmbeddingProvider {
    fn embed_tokens(&self, tokens: &[String]) -> Result<EmbeddingMatrix, EmbeddingError> {
        if tokens.is_empty() {
            return Err(EmbeddingError::EmptyInput);
        }
        let mut vectors = Vec::with_capacity(tokens.len());
        for token in tokens {
            let cached = self.cache.lock().expect("cache lock").get(token).cloned();
            let vector = match cached {
                Some(v) => v,
                None => {
                    let v = self.fetch(token)?;
                    self.cache
                        .lock()
                        .expect("cache lock")
                        .insert(token.clone(), v.clone());
                    v
                }
            };
            vectors.push(vector);
        }
        EmbeddingMatrix::new(tokens.to_vec(), vectors)
    }
}
