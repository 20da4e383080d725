//! Automatic evaluation of a candidate ending against the gold ending.
//!
//! One call to [`score_pair`] tokenizes both sides once and produces every
//! metric in a [`ScoreSet`]: n-gram precision overlap ([`bleu`]), recall
//! overlap ([`rouge_n`], [`rouge_l`]), aligned unigram matching
//! ([`meteor`]), embedding similarity ([`bert_score`]), and language-model
//! [`perplexity`] of the candidate. Degenerate inputs produce zero scores
//! plus a flag, never a panic, so batch evaluation always completes.

mod bert;
mod bleu;
mod meteor;
mod perplexity;
mod rouge;
mod stemmer;
mod tokenizer;

pub use bert::bert_score;
pub use bleu::bleu;
pub use meteor::{meteor, MeteorParams};
pub use perplexity::{perplexity, SequenceScore, SequenceScorer, UniformScorer};
pub use rouge::{rouge_l, rouge_n};
pub use stemmer::stem;
pub use tokenizer::{tokenize, TokenizerConfig};

use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingProvider;

/// Precision, recall, and their harmonic mean. F1 is 0 whenever both
/// precision and recall are 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecallF1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl PrecisionRecallF1 {
    pub const ZERO: Self = Self {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };

    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub bleu_max_n: usize,
    pub meteor: MeteorParams,
    pub tokenizer: TokenizerConfig,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            bleu_max_n: 4,
            meteor: MeteorParams::default(),
            tokenizer: TokenizerConfig::default(),
        }
    }
}

/// Every metric for one candidate/reference pair. `flags` names degenerate
/// conditions hit while scoring (empty sides, embedding failures).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    pub bleu: f64,
    pub rouge1: PrecisionRecallF1,
    pub rouge2: PrecisionRecallF1,
    pub rouge_l: PrecisionRecallF1,
    pub meteor: f64,
    pub bert: PrecisionRecallF1,
    pub perplexity: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

/// Scores one candidate against one reference with every metric.
/// Both texts are tokenized exactly once; perplexity is computed on the
/// candidate alone.
pub fn score_pair(
    candidate: &str,
    reference: &str,
    config: &MetricConfig,
    embedder: &dyn EmbeddingProvider,
    scorer: &dyn SequenceScorer,
) -> ScoreSet {
    let cand = tokenize(candidate, &config.tokenizer);
    let refr = tokenize(reference, &config.tokenizer);

    let mut flags = Vec::new();
    if cand.is_empty() {
        flags.push("empty_candidate".to_string());
    }
    if refr.is_empty() {
        flags.push("empty_reference".to_string());
    }

    let bert = if cand.is_empty() || refr.is_empty() {
        PrecisionRecallF1::ZERO
    } else {
        match bert_score(&cand, &refr, embedder) {
            Ok(prf) => prf,
            Err(e) => {
                flags.push(format!("embedding_failure: {e}"));
                PrecisionRecallF1::ZERO
            }
        }
    };

    ScoreSet {
        bleu: bleu(&cand, &refr, config.bleu_max_n),
        rouge1: rouge_n(&cand, &refr, 1),
        rouge2: rouge_n(&cand, &refr, 2),
        rouge_l: rouge_l(&cand, &refr),
        meteor: meteor(&cand, &refr, &config.meteor),
        bert,
        perplexity: perplexity(candidate, scorer),
        flags,
    }
}
