//! Ending generators: the pluggable strategies that produce a candidate
//! fifth sentence for a story body.
//!
//! Four kinds ship: uniform random selection from a pool of real endings,
//! character n-gram generation, an OpenAI-compatible chat endpoint, and an
//! echo backend that returns the gold ending to calibrate metric ceilings.
//! All of them implement [`EndingBackend`] and yield [`GenerationRecord`]s
//! the harness persists.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::Story;
use crate::net::{post_json_with_retry, ExchangeLog, NetError, RetryPolicy};
use crate::ngram::CharNgramModel;
use crate::rng::stream_for;

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("prompt template {name:?} must contain exactly one {{body}} placeholder, found {found}")]
    TemplatePlaceholders { name: String, found: usize },
    #[error("no built-in prompt template named {0:?}")]
    UnknownTemplate(String),
    #[error("ending pool is empty")]
    EmptyPool,
    #[error("{0}")]
    Net(#[from] NetError),
    #[error("chat response had no usable message content")]
    EmptyCompletion,
    #[error("backend produced an empty ending")]
    EmptyEnding,
}

/// A named prompt pattern with exactly one `{body}` placeholder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub name: String,
    pub pattern: String,
}

impl PromptTemplate {
    pub fn new(name: impl Into<String>, pattern: impl Into<String>) -> Result<Self, BackendError> {
        let name = name.into();
        let pattern = pattern.into();
        let found = pattern.matches("{body}").count();
        if found != 1 {
            return Err(BackendError::TemplatePlaceholders { name, found });
        }
        Ok(Self { name, pattern })
    }

    /// Substitutes the story body into the placeholder.
    pub fn render(&self, body: &str) -> String {
        self.pattern.replacen("{body}", body, 1)
    }
}

/// The two built-in prompt styles: an instruction prefix and a completion
/// suffix.
pub fn builtin_templates() -> Vec<PromptTemplate> {
    vec![
        PromptTemplate::new("gpt", "Write a conclusion to the following story: {body}")
            .expect("builtin template"),
        PromptTemplate::new(
            "mamba",
            "{body} Complete this story by generating its last line to give it a logical ending:",
        )
        .expect("builtin template"),
    ]
}

pub fn template_by_name(name: &str) -> Result<PromptTemplate, BackendError> {
    builtin_templates()
        .into_iter()
        .find(|t| t.name == name)
        .ok_or_else(|| BackendError::UnknownTemplate(name.to_string()))
}

/// Where a random-selection backend draws its endings from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolSource {
    /// Fifth sentences of the whole corpus; a story can draw its own gold
    /// ending.
    #[default]
    Full,
    /// Fifth sentences of the train split only.
    Train,
}

/// Whether character generation is primed with the story body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairingMode {
    /// Fresh sentence from an empty context.
    #[default]
    Unpaired,
    /// The last order-1 characters of the body prime the context window.
    Paired,
}

fn default_temperature() -> f64 {
    0.7
}

fn default_max_tokens() -> u32 {
    60
}

fn default_concurrency() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteChatSettings {
    pub endpoint: String,
    pub model: String,
    /// Built-in template name ("gpt" or "mamba").
    pub template: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    /// Environment variable holding the bearer token; omit to send no
    /// Authorization header.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default)]
    pub retry: RetryPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BackendKind {
    RandomSelection {
        #[serde(default)]
        pool: PoolSource,
    },
    CharNgram {
        order: usize,
        #[serde(default)]
        mode: PairingMode,
        #[serde(default = "default_max_chars")]
        max_chars: usize,
        /// Pre-fitted model file; when absent the harness fits on the
        /// train split.
        #[serde(default)]
        model_path: Option<String>,
    },
    RemoteChat(RemoteChatSettings),
    Echo,
}

fn default_max_chars() -> usize {
    200
}

/// One backend entry in a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub id: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(flatten)]
    pub kind: BackendKind,
}

/// One persisted generation: which story, which backend, what was asked,
/// what came back.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub story_id: String,
    pub backend_id: String,
    pub prompt: String,
    pub ending: String,
    pub created_at: u64,
}

/// A story paired with its stable index in the split being generated over.
/// The index, not the processing order, drives per-item randomness.
pub struct GenerationInput<'a> {
    pub story: &'a Story,
    pub index: usize,
}

pub struct GeneratedEnding {
    pub prompt: String,
    pub ending: String,
}

pub trait EndingBackend: Send + Sync {
    fn id(&self) -> &str;
    fn generate(&self, input: &GenerationInput<'_>) -> Result<GeneratedEnding, BackendError>;
}

/// Uniform draw from `pool` for the story at `story_index`, on that
/// item's own substream of `seed`.
pub fn random_selection_ending<'p>(
    pool: &'p [String],
    story_index: usize,
    seed: u64,
) -> Result<&'p str, BackendError> {
    if pool.is_empty() {
        return Err(BackendError::EmptyPool);
    }
    let mut rng = stream_for(seed, story_index as u64);
    Ok(&pool[rng.next_below(pool.len())])
}

/// Picks a real ending from the pool at random; the gold ending is not
/// excluded, so this baseline occasionally lands an exact hit.
pub struct RandomSelectionBackend {
    id: String,
    seed: u64,
    pool: Vec<String>,
}

impl RandomSelectionBackend {
    pub fn new(id: impl Into<String>, seed: u64, pool: Vec<String>) -> Result<Self, BackendError> {
        if pool.is_empty() {
            return Err(BackendError::EmptyPool);
        }
        Ok(Self {
            id: id.into(),
            seed,
            pool,
        })
    }
}

impl EndingBackend for RandomSelectionBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn generate(&self, input: &GenerationInput<'_>) -> Result<GeneratedEnding, BackendError> {
        let ending = random_selection_ending(&self.pool, input.index, self.seed)?;
        Ok(GeneratedEnding {
            prompt: input.story.body(),
            ending: ending.to_string(),
        })
    }
}

/// Samples an ending from a character n-gram model.
pub struct CharNgramBackend {
    id: String,
    seed: u64,
    model: CharNgramModel,
    mode: PairingMode,
    max_chars: usize,
}

impl CharNgramBackend {
    pub fn new(
        id: impl Into<String>,
        seed: u64,
        model: CharNgramModel,
        mode: PairingMode,
        max_chars: usize,
    ) -> Self {
        Self {
            id: id.into(),
            seed,
            model,
            mode,
            max_chars,
        }
    }
}

impl EndingBackend for CharNgramBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn generate(&self, input: &GenerationInput<'_>) -> Result<GeneratedEnding, BackendError> {
        let body = input.story.body();
        let prime = match self.mode {
            PairingMode::Unpaired => None,
            PairingMode::Paired => {
                let chars: Vec<char> = body.chars().collect();
                let window = self.model.order() - 1;
                let start = chars.len().saturating_sub(window);
                Some(chars[start..].iter().collect::<String>())
            }
        };
        let mut rng = stream_for(self.seed, input.index as u64);
        let ending = self
            .model
            .generate_sentence(&mut rng, prime.as_deref(), self.max_chars);
        if ending.is_empty() {
            return Err(BackendError::EmptyEnding);
        }
        Ok(GeneratedEnding {
            prompt: body,
            ending,
        })
    }
}

/// Returns the gold fifth sentence. Every overlap metric should saturate
/// on its output, which pins the ceiling the other backends chase.
pub struct EchoBackend {
    id: String,
}

impl EchoBackend {
    pub fn new(id: impl Into<String>) -> Self {
        Self { id: id.into() }
    }
}

impl EndingBackend for EchoBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn generate(&self, input: &GenerationInput<'_>) -> Result<GeneratedEnding, BackendError> {
        Ok(GeneratedEnding {
            prompt: input.story.body(),
            ending: input.story.ending().to_string(),
        })
    }
}

/// Chat-completions client for an OpenAI-compatible endpoint: one user
/// message per story, bearer auth from the environment, retries on rate
/// limits and transient failures, and a full request/response audit line
/// per call.
pub struct RemoteChatBackend {
    id: String,
    settings: RemoteChatSettings,
    template: PromptTemplate,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    log: Option<std::sync::Arc<ExchangeLog>>,
}

impl RemoteChatBackend {
    pub fn new(
        id: impl Into<String>,
        settings: RemoteChatSettings,
        log: Option<std::sync::Arc<ExchangeLog>>,
    ) -> Result<Self, BackendError> {
        let template = template_by_name(&settings.template)?;
        let api_key = match &settings.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                NetError::Credential(format!("environment variable {var} is not set"))
            })?),
            None => None,
        };
        Ok(Self {
            id: id.into(),
            settings,
            template,
            api_key,
            client: reqwest::blocking::Client::new(),
            log,
        })
    }

    pub fn concurrency(&self) -> usize {
        self.settings.concurrency.max(1)
    }
}

impl EndingBackend for RemoteChatBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn generate(&self, input: &GenerationInput<'_>) -> Result<GeneratedEnding, BackendError> {
        let prompt = self.template.render(&input.story.body());
        let request = json!({
            "model": self.settings.model,
            "messages": [{ "role": "user", "content": prompt }],
            "temperature": self.settings.temperature,
            "max_tokens": self.settings.max_tokens,
        });
        let (response, _attempts) = post_json_with_retry(
            &self.client,
            &self.settings.endpoint,
            self.api_key.as_deref(),
            &request,
            &self.settings.retry,
            self.log.as_deref().map(|l| (l, "chat")),
        )?;
        let content = response
            .pointer("/choices/0/message/content")
            .and_then(|v| v.as_str())
            .ok_or(BackendError::EmptyCompletion)?;
        let ending = content.trim().to_string();
        if ending.is_empty() {
            return Err(BackendError::EmptyEnding);
        }
        Ok(GeneratedEnding { prompt, ending })
    }
}
