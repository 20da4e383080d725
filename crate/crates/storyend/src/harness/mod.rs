//! Run orchestration: takes a [`RunConfig`] and a run directory and moves
//! a corpus through generation, evaluation, and reporting.
//!
//! A run directory holds `manifest.json` plus append-only JSONL state
//! (`records.jsonl`, `failures.jsonl`, `exchanges.jsonl`, `ratings.jsonl`),
//! a wholesale-rewritten `scores.jsonl`, and a `sessions/` directory for
//! blinded rating sessions. Generation is resumable: already-persisted
//! (story, backend) pairs are skipped, and a directory whose manifest does
//! not match the current corpus or configuration is refused rather than
//! extended.

mod config;
mod report;
mod store;

pub use config::{CorpusSection, EmbedderSection, MetricsSection, RunConfig, ScorerSection};
pub use report::{
    build_report, render, render_csv, render_json, render_table, BackendSummary, MetricReport,
    ReportFormat,
};
pub use store::{load_jsonl, rewrite_jsonl, JsonlWriter, StoreError};

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::backends::{
    BackendConfig, BackendError, BackendKind, CharNgramBackend, EchoBackend, EndingBackend,
    GeneratedEnding, GenerationInput, GenerationRecord, PoolSource, RandomSelectionBackend,
    RemoteChatBackend,
};
use crate::corpus::{
    fifth_sentence_pool, fingerprint, load_csv, split_corpus, training_text, Corpus, CorpusError,
    Story,
};
use crate::embeddings::{
    EmbeddingError, EmbeddingProvider, OneHotEmbedder, RemoteEmbeddingConfig,
    RemoteEmbeddingProvider,
};
use crate::metrics::{score_pair, TokenizerConfig};
use crate::net::ExchangeLog;
use crate::ngram::{CharNgramModel, NgramError, WordNgramLm};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Ngram(#[from] NgramError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("run directory {0} has no manifest; run generation first")]
    MissingManifest(PathBuf),
    #[error(
        "run directory belongs to corpus fingerprint {expected} but the current corpus has {found}; \
         start a fresh run directory"
    )]
    StaleRun { expected: String, found: String },
    #[error(
        "run directory belongs to run {expected} but the current configuration digests to {found}; \
         start a fresh run directory"
    )]
    ConfigChanged { expected: String, found: String },
    #[error("could not write {path}: {message}")]
    Write { path: PathBuf, message: String },
}

/// File layout inside one run directory.
pub struct RunPaths {
    pub root: PathBuf,
}

impl RunPaths {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn records(&self) -> PathBuf {
        self.root.join("records.jsonl")
    }

    pub fn scores(&self) -> PathBuf {
        self.root.join("scores.jsonl")
    }

    pub fn ratings(&self) -> PathBuf {
        self.root.join("ratings.jsonl")
    }

    pub fn failures(&self) -> PathBuf {
        self.root.join("failures.jsonl")
    }

    pub fn exchanges(&self) -> PathBuf {
        self.root.join("exchanges.jsonl")
    }

    pub fn sessions_dir(&self) -> PathBuf {
        self.root.join("sessions")
    }
}

/// Identity of a run: which corpus, which split, which backends. Written
/// once when the directory is created and checked on every later stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub corpus_fingerprint: String,
    pub stories: usize,
    pub train_stories: usize,
    pub test_stories: usize,
    pub backend_ids: Vec<String>,
    pub created_at: u64,
}

/// One scored candidate ending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub story_id: String,
    pub backend_id: String,
    pub scores: crate::metrics::ScoreSet,
}

/// One per-item problem that did not stop the run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub story_id: String,
    pub backend_id: String,
    pub stage: String,
    pub message: String,
    pub at: u64,
}

#[derive(Debug, Clone, Default)]
pub struct GenerationOptions {
    /// Stop after appending this many new records; used to rehearse
    /// interruption and resume.
    pub limit: Option<usize>,
    /// Stamp every record with this time instead of the wall clock, which
    /// makes two identical runs byte-identical.
    pub fixed_timestamp: Option<u64>,
}

#[derive(Debug, Default, PartialEq, Eq)]
pub struct GenerationStats {
    pub generated: usize,
    pub skipped: usize,
    pub failed: usize,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct EvaluationOptions {
    pub fixed_timestamp: Option<u64>,
}

#[derive(Debug, Default, PartialEq, Eq)]
pub struct EvaluationStats {
    pub scored: usize,
    pub skipped: usize,
    pub diagnostics: Vec<String>,
}

fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Corpus plus its derived split, loaded once per stage.
struct LoadedCorpus {
    corpus: Corpus,
    train: Corpus,
    test: Corpus,
    fingerprint: String,
    diagnostics: Vec<String>,
}

fn load_config_corpus(config: &RunConfig) -> Result<LoadedCorpus, HarnessError> {
    let outcome = load_csv(&config.corpus.path)?;
    let diagnostics = outcome
        .diagnostics
        .iter()
        .map(|d| d.to_string())
        .collect();
    let fingerprint = fingerprint(&outcome.corpus);
    let (train, test) = split_corpus(&outcome.corpus, &config.split)?;
    Ok(LoadedCorpus {
        corpus: outcome.corpus,
        train,
        test,
        fingerprint,
        diagnostics,
    })
}

fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| HarnessError::Write {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn load_manifest(paths: &RunPaths) -> Result<RunManifest, HarnessError> {
    let path = paths.manifest();
    let text = std::fs::read_to_string(&path)
        .map_err(|_| HarnessError::MissingManifest(paths.root.clone()))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!(
        "{} is not a valid manifest: {e}",
        path.display()
    )))
}

/// Verifies an existing run directory against the current config and
/// corpus, or stamps a new manifest into an empty one.
fn ensure_manifest(
    paths: &RunPaths,
    config: &RunConfig,
    loaded: &LoadedCorpus,
    timestamp: u64,
) -> Result<RunManifest, HarnessError> {
    let run_id = config.run_id();
    if paths.manifest().exists() {
        let existing = load_manifest(paths)?;
        if existing.run_id != run_id {
            return Err(HarnessError::ConfigChanged {
                expected: existing.run_id,
                found: run_id,
            });
        }
        if existing.corpus_fingerprint != loaded.fingerprint {
            return Err(HarnessError::StaleRun {
                expected: existing.corpus_fingerprint,
                found: loaded.fingerprint.clone(),
            });
        }
        return Ok(existing);
    }
    let manifest = RunManifest {
        run_id,
        corpus_fingerprint: loaded.fingerprint.clone(),
        stories: loaded.corpus.len(),
        train_stories: loaded.train.len(),
        test_stories: loaded.test.len(),
        backend_ids: config.backends.iter().map(|b| b.id.clone()).collect(),
        created_at: timestamp,
    };
    write_manifest(&paths.manifest(), &manifest)?;
    Ok(manifest)
}

fn open_exchange_log(
    slot: &mut Option<Arc<ExchangeLog>>,
    paths: &RunPaths,
) -> Result<Arc<ExchangeLog>, HarnessError> {
    if let Some(log) = slot {
        return Ok(log.clone());
    }
    let log = Arc::new(
        ExchangeLog::open(paths.exchanges())
            .map_err(|e| HarnessError::Config(format!("exchange log: {e}")))?,
    );
    *slot = Some(log.clone());
    Ok(log)
}

fn build_backend(
    cfg: &BackendConfig,
    loaded: &LoadedCorpus,
    paths: &RunPaths,
    exchange_log: &mut Option<Arc<ExchangeLog>>,
) -> Result<(Box<dyn EndingBackend>, usize), HarnessError> {
    match &cfg.kind {
        BackendKind::RandomSelection { pool } => {
            let endings = match pool {
                PoolSource::Full => fifth_sentence_pool(&loaded.corpus),
                PoolSource::Train => fifth_sentence_pool(&loaded.train),
            };
            let backend = RandomSelectionBackend::new(cfg.id.clone(), cfg.seed, endings)?;
            Ok((Box::new(backend), 1))
        }
        BackendKind::CharNgram {
            order,
            mode,
            max_chars,
            model_path,
        } => {
            let model = match model_path {
                Some(path) => CharNgramModel::load(path)?,
                None => {
                    let texts: Vec<String> = loaded
                        .train
                        .stories
                        .iter()
                        .map(|s| training_text(s, " "))
                        .collect();
                    CharNgramModel::fit(&texts, *order)?
                }
            };
            let backend =
                CharNgramBackend::new(cfg.id.clone(), cfg.seed, model, *mode, *max_chars);
            Ok((Box::new(backend), 1))
        }
        BackendKind::RemoteChat(settings) => {
            let log = open_exchange_log(exchange_log, paths)?;
            let backend = RemoteChatBackend::new(cfg.id.clone(), settings.clone(), Some(log))?;
            let concurrency = backend.concurrency();
            Ok((Box::new(backend), concurrency))
        }
        BackendKind::Echo => Ok((Box::new(EchoBackend::new(cfg.id.clone())), 1)),
    }
}

/// Generates candidate endings for every test-split story under every
/// configured backend, appending to `records.jsonl` as each one lands.
/// Pairs already on disk are skipped, so rerunning after an interruption
/// finishes the remainder.
pub fn run_generation(
    config: &RunConfig,
    run_dir: &Path,
    options: &GenerationOptions,
) -> Result<GenerationStats, HarnessError> {
    let loaded = load_config_corpus(config)?;
    std::fs::create_dir_all(run_dir).map_err(|e| HarnessError::Write {
        path: run_dir.to_path_buf(),
        message: e.to_string(),
    })?;
    let paths = RunPaths::new(run_dir);
    let timestamp = options.fixed_timestamp.unwrap_or_else(now_unix);
    ensure_manifest(&paths, config, &loaded, timestamp)?;

    let existing: Vec<GenerationRecord> = load_jsonl(&paths.records())?;
    let done: HashSet<(String, String)> = existing
        .into_iter()
        .map(|r| (r.story_id, r.backend_id))
        .collect();

    let mut records = JsonlWriter::open(paths.records())?;
    let mut failures = JsonlWriter::open(paths.failures())?;
    let mut exchange_log = None;

    let mut stats = GenerationStats {
        diagnostics: loaded.diagnostics.clone(),
        ..GenerationStats::default()
    };
    let mut remaining = options.limit;

    'backends: for cfg in &config.backends {
        let (backend, concurrency) = build_backend(cfg, &loaded, &paths, &mut exchange_log)?;
        let pending: Vec<(usize, &Story)> = loaded
            .test
            .stories
            .iter()
            .enumerate()
            .filter(|(_, story)| {
                let seen = done.contains(&(story.id.clone(), cfg.id.clone()));
                if seen {
                    stats.skipped += 1;
                }
                !seen
            })
            .collect();

        for chunk in pending.chunks(concurrency.max(1)) {
            let results: Vec<Result<GeneratedEnding, BackendError>> = if concurrency <= 1 {
                chunk
                    .iter()
                    .map(|(index, story)| {
                        backend.generate(&GenerationInput {
                            story,
                            index: *index,
                        })
                    })
                    .collect()
            } else {
                std::thread::scope(|scope| {
                    let handles: Vec<_> = chunk
                        .iter()
                        .map(|(index, story)| {
                            let backend = backend.as_ref();
                            scope.spawn(move || {
                                backend.generate(&GenerationInput {
                                    story,
                                    index: *index,
                                })
                            })
                        })
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("generation worker panicked"))
                        .collect()
                })
            };

            for ((_, story), result) in chunk.iter().zip(results) {
                if remaining == Some(0) {
                    break 'backends;
                }
                match result {
                    Ok(out) => {
                        records.append(&GenerationRecord {
                            story_id: story.id.clone(),
                            backend_id: cfg.id.clone(),
                            prompt: out.prompt,
                            ending: out.ending,
                            created_at: timestamp,
                        })?;
                        stats.generated += 1;
                        if let Some(r) = remaining.as_mut() {
                            *r -= 1;
                        }
                    }
                    Err(e) => {
                        failures.append(&FailureRecord {
                            story_id: story.id.clone(),
                            backend_id: cfg.id.clone(),
                            stage: "generation".into(),
                            message: e.to_string(),
                            at: timestamp,
                        })?;
                        stats.failed += 1;
                    }
                }
            }
        }
    }

    Ok(stats)
}

/// Scores every persisted record against its story's gold ending and
/// rewrites `scores.jsonl` from scratch. The perplexity scorer is fitted
/// on the train split, so test candidates are scored by a model that
/// never saw them.
pub fn run_evaluation(
    config: &RunConfig,
    run_dir: &Path,
    options: &EvaluationOptions,
) -> Result<EvaluationStats, HarnessError> {
    let paths = RunPaths::new(run_dir);
    let manifest = load_manifest(&paths)?;
    let run_id = config.run_id();
    if manifest.run_id != run_id {
        return Err(HarnessError::ConfigChanged {
            expected: manifest.run_id,
            found: run_id,
        });
    }
    let loaded = load_config_corpus(config)?;
    if manifest.corpus_fingerprint != loaded.fingerprint {
        return Err(HarnessError::StaleRun {
            expected: manifest.corpus_fingerprint,
            found: loaded.fingerprint,
        });
    }

    let train_texts: Vec<String> = loaded
        .train
        .stories
        .iter()
        .map(|s| training_text(s, " "))
        .collect();
    let scorer = WordNgramLm::fit(
        &train_texts,
        config.scorer.order,
        config.scorer.alpha,
        TokenizerConfig {
            lowercase: config.metrics.lowercase,
        },
    )?;

    let mut exchange_log = None;
    let embedder: Box<dyn EmbeddingProvider> = match &config.embedder {
        EmbedderSection::OneHot => Box::new(OneHotEmbedder::default()),
        EmbedderSection::Remote {
            endpoint,
            model,
            api_key_env,
            retry,
        } => {
            let log = open_exchange_log(&mut exchange_log, &paths)?;
            Box::new(RemoteEmbeddingProvider::new(
                RemoteEmbeddingConfig {
                    endpoint: endpoint.clone(),
                    model: model.clone(),
                    api_key_env: api_key_env.clone(),
                    retry: retry.clone(),
                },
                Some(log),
            )?)
        }
    };

    let metric_config = config.metrics.to_metric_config();
    let records: Vec<GenerationRecord> = load_jsonl(&paths.records())?;
    let index = loaded.corpus.id_index();
    let timestamp = options.fixed_timestamp.unwrap_or_else(now_unix);

    let mut stats = EvaluationStats::default();
    let mut score_records = Vec::with_capacity(records.len());
    let mut eval_failures = Vec::new();
    for record in &records {
        let Some(&story_ix) = index.get(record.story_id.as_str()) else {
            stats.skipped += 1;
            stats.diagnostics.push(format!(
                "record for unknown story {} ignored",
                record.story_id
            ));
            eval_failures.push(FailureRecord {
                story_id: record.story_id.clone(),
                backend_id: record.backend_id.clone(),
                stage: "evaluation".into(),
                message: "story id not present in the corpus".into(),
                at: timestamp,
            });
            continue;
        };
        let gold = loaded.corpus.stories[story_ix].ending();
        let scores = score_pair(
            &record.ending,
            gold,
            &metric_config,
            embedder.as_ref(),
            &scorer,
        );
        score_records.push(ScoreRecord {
            story_id: record.story_id.clone(),
            backend_id: record.backend_id.clone(),
            scores,
        });
        stats.scored += 1;
    }

    rewrite_jsonl(&paths.scores(), &score_records)?;

    // evaluation failure lines are replaced, not accumulated, so
    // re-evaluating cannot duplicate them
    let mut failure_records: Vec<FailureRecord> = load_jsonl(&paths.failures())?;
    failure_records.retain(|f| f.stage != "evaluation");
    failure_records.extend(eval_failures);
    rewrite_jsonl(&paths.failures(), &failure_records)?;

    Ok(stats)
}
