//! Perplexity bridge between any sequence scorer and the metric suite.

use super::tokenizer::{tokenize, TokenizerConfig};

/// Natural-log probability of a text plus how many tokens were scored.
/// The count includes the end-of-sequence token, so it is at least 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceScore {
    pub log_prob: f64,
    pub token_count: usize,
}

pub trait SequenceScorer: Send + Sync {
    fn sequence_score(&self, text: &str) -> SequenceScore;
}

/// `exp(-log_prob / token_count)`: the per-token inverse probability.
/// An empty text still scores: it is the lone end-of-sequence token.
pub fn perplexity(text: &str, scorer: &dyn SequenceScorer) -> f64 {
    let s = scorer.sequence_score(text);
    (-s.log_prob / s.token_count.max(1) as f64).exp()
}

/// Scorer that gives every token the same probability `1/vocab_size`.
/// Its perplexity is `vocab_size` for any text, which makes it the
/// calibration point for the perplexity bridge.
#[derive(Debug, Clone, Copy)]
pub struct UniformScorer {
    pub vocab_size: usize,
}

impl SequenceScorer for UniformScorer {
    fn sequence_score(&self, text: &str) -> SequenceScore {
        let tokens = tokenize(text, &TokenizerConfig::default());
        let count = tokens.len() + 1;
        SequenceScore {
            log_prob: -(count as f64) * (self.vocab_size as f64).ln(),
            token_count: count,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_scorer_perplexity_is_vocab_size() {
        let scorer = UniformScorer { vocab_size: 10 };
        for text in ["one two three", "a", "a much longer sentence right here"] {
            assert!((perplexity(text, &scorer) - 10.0).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_text_scores_the_end_token_alone() {
        let scorer = UniformScorer { vocab_size: 7 };
        assert!((perplexity("", &scorer) - 7.0).abs() < 1e-9);
    }

    #[test]
    fn certain_scorer_gives_perplexity_one() {
        struct Certain;
        impl SequenceScorer for Certain {
            fn sequence_score(&self, _: &str) -> SequenceScore {
                SequenceScore {
                    log_prob: 0.0,
                    token_count: 5,
                }
            }
        }
        assert_eq!(perplexity("whatever", &Certain), 1.0);
    }
}
