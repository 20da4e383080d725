//! Word-level n-gram language model with additive smoothing.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::{escape, read_model_file, unescape, write_model_file, NgramError};
use crate::metrics::{tokenize, SequenceScore, SequenceScorer, TokenizerConfig};

pub const START_TOKEN: &str = "<s>";
pub const END_TOKEN: &str = "</s>";
pub const UNK_TOKEN: &str = "<unk>";

/// Order-n word model. Each training text is wrapped in n-1 start tokens
/// and one end token before counting. The stored vocabulary is the
/// observed tokens plus the three reserved ones; predictions range over
/// everything except the start token, which can never follow a context.
#[derive(Debug, Clone, PartialEq)]
pub struct WordNgramLm {
    order: usize,
    alpha: f64,
    smoothed: bool,
    tokenizer: TokenizerConfig,
    vocab: BTreeSet<String>,
    counts: BTreeMap<Vec<String>, BTreeMap<String, u64>>,
    totals: BTreeMap<Vec<String>, u64>,
}

impl WordNgramLm {
    /// Fits with additive smoothing: every conditional gets `alpha` added
    /// to its count and `alpha * |prediction vocabulary|` to its
    /// denominator. Requires order >= 1, finite alpha > 0, and a
    /// non-empty text list.
    pub fn fit<S: AsRef<str>>(
        texts: &[S],
        order: usize,
        alpha: f64,
        tokenizer: TokenizerConfig,
    ) -> Result<Self, NgramError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(NgramError::Alpha(alpha));
        }
        Self::fit_inner(texts, order, alpha, true, tokenizer)
    }

    /// Fits with raw maximum-likelihood counts and no smoothing. Scoring
    /// an unseen event yields probability 0 (log-probability -inf), so
    /// this variant exists for controlled tests, not pipelines.
    pub fn fit_unsmoothed<S: AsRef<str>>(
        texts: &[S],
        order: usize,
        tokenizer: TokenizerConfig,
    ) -> Result<Self, NgramError> {
        Self::fit_inner(texts, order, 0.0, false, tokenizer)
    }

    fn fit_inner<S: AsRef<str>>(
        texts: &[S],
        order: usize,
        alpha: f64,
        smoothed: bool,
        tokenizer: TokenizerConfig,
    ) -> Result<Self, NgramError> {
        if order < 1 {
            return Err(NgramError::Order { min: 1, got: order });
        }
        if texts.is_empty() {
            return Err(NgramError::EmptyCorpus);
        }
        let mut vocab: BTreeSet<String> =
            [START_TOKEN, END_TOKEN, UNK_TOKEN].iter().map(|s| s.to_string()).collect();
        let mut counts: BTreeMap<Vec<String>, BTreeMap<String, u64>> = BTreeMap::new();
        let mut totals: BTreeMap<Vec<String>, u64> = BTreeMap::new();
        for text in texts {
            let tokens = tokenize(text.as_ref(), &tokenizer);
            vocab.extend(tokens.iter().cloned());
            let mut wrapped: Vec<String> = vec![START_TOKEN.to_string(); order - 1];
            wrapped.extend(tokens);
            wrapped.push(END_TOKEN.to_string());
            for i in (order - 1)..wrapped.len() {
                let context = wrapped[i - (order - 1)..i].to_vec();
                *counts
                    .entry(context.clone())
                    .or_default()
                    .entry(wrapped[i].clone())
                    .or_insert(0) += 1;
                *totals.entry(context).or_insert(0) += 1;
            }
        }
        Ok(Self {
            order,
            alpha,
            smoothed,
            tokenizer,
            vocab,
            counts,
            totals,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Observed tokens plus the reserved start, end, and unknown tokens.
    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    /// Tokens a context can be followed by: everything but the start token.
    pub fn prediction_vocab_size(&self) -> usize {
        self.vocab.len() - 1
    }

    fn intern<'a>(&self, token: &'a str) -> &'a str {
        if self.vocab.contains(token) {
            token
        } else {
            UNK_TOKEN
        }
    }

    /// P(token | context). The context must hold exactly order-1 tokens;
    /// out-of-vocabulary tokens on either side are treated as the unknown
    /// token. With smoothing the result is always strictly positive.
    pub fn conditional(&self, context: &[String], token: &str) -> f64 {
        assert_eq!(
            context.len(),
            self.order - 1,
            "context must hold order-1 tokens"
        );
        let ctx: Vec<String> = context.iter().map(|t| self.intern(t).to_string()).collect();
        let tok = self.intern(token);
        let total = self.totals.get(&ctx).copied().unwrap_or(0);
        let count = self
            .counts
            .get(&ctx)
            .and_then(|m| m.get(tok))
            .copied()
            .unwrap_or(0);
        if self.smoothed {
            (count as f64 + self.alpha)
                / (total as f64 + self.alpha * self.prediction_vocab_size() as f64)
        } else if total == 0 {
            0.0
        } else {
            count as f64 / total as f64
        }
    }

    /// Natural-log probability of the text under the model, wrapped the
    /// same way training texts were. The token count includes the end
    /// token. Finite whenever the model is smoothed.
    pub fn sequence_log_prob(&self, text: &str) -> SequenceScore {
        let tokens = tokenize(text, &self.tokenizer);
        let token_count = tokens.len() + 1;
        let mut wrapped: Vec<String> = vec![START_TOKEN.to_string(); self.order - 1];
        wrapped.extend(tokens.iter().map(|t| self.intern(t).to_string()));
        wrapped.push(END_TOKEN.to_string());
        let mut log_prob = 0.0;
        for i in (self.order - 1)..wrapped.len() {
            let p = self.conditional(&wrapped[i - (self.order - 1)..i], &wrapped[i]);
            log_prob += p.ln();
        }
        SequenceScore {
            log_prob,
            token_count,
        }
    }

    /// Versioned flat text form; sorted lines make it byte-deterministic,
    /// and reloading reproduces the model bit-exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("wordlm 1\n");
        out.push_str(&format!("order {}\n", self.order));
        out.push_str(&format!("alpha {}\n", self.alpha));
        out.push_str(&format!("smoothed {}\n", self.smoothed));
        out.push_str(&format!("lowercase {}\n", self.tokenizer.lowercase));
        for token in &self.vocab {
            out.push_str(&format!("vocab {}\n", escape(token)));
        }
        for (context, successors) in &self.counts {
            for (token, n) in successors {
                out.push_str("count");
                for c in context {
                    out.push(' ');
                    out.push_str(&escape(c));
                }
                out.push_str(&format!(" {} {}\n", escape(token), n));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, NgramError> {
        let mut lines = text.lines().enumerate();
        let mut take_field = |prefix: &str| -> Result<(usize, String), NgramError> {
            match lines.next() {
                Some((i, line)) => {
                    let ln = i + 1;
                    line.strip_prefix(prefix)
                        .map(|v| (ln, v.to_string()))
                        .ok_or_else(|| {
                            NgramError::parse(ln, format!("expected line starting with {prefix:?}"))
                        })
                }
                None => Err(NgramError::parse(0, format!("missing {prefix:?} line"))),
            }
        };

        let (ln, header) = take_field("wordlm ")?;
        if header != "1" {
            return Err(NgramError::parse(ln, format!("unsupported version {header:?}")));
        }
        let (ln, order) = take_field("order ")?;
        let order: usize = order
            .parse()
            .map_err(|_| NgramError::parse(ln, "order must be an integer"))?;
        if order < 1 {
            return Err(NgramError::Order { min: 1, got: order });
        }
        let (ln, alpha) = take_field("alpha ")?;
        let alpha: f64 = alpha
            .parse()
            .map_err(|_| NgramError::parse(ln, "alpha must be a number"))?;
        let (ln, smoothed) = take_field("smoothed ")?;
        let smoothed: bool = smoothed
            .parse()
            .map_err(|_| NgramError::parse(ln, "smoothed must be true or false"))?;
        let (ln, lowercase) = take_field("lowercase ")?;
        let lowercase: bool = lowercase
            .parse()
            .map_err(|_| NgramError::parse(ln, "lowercase must be true or false"))?;

        let mut vocab = BTreeSet::new();
        let mut counts: BTreeMap<Vec<String>, BTreeMap<String, u64>> = BTreeMap::new();
        let mut totals: BTreeMap<Vec<String>, u64> = BTreeMap::new();
        for (i, line) in lines {
            let ln = i + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("vocab ") {
                vocab.insert(unescape(rest, ln)?);
                continue;
            }
            let Some(rest) = line.strip_prefix("count ") else {
                return Err(NgramError::parse(ln, "expected a vocab or count line"));
            };
            let fields: Vec<&str> = rest.split(' ').collect();
            if fields.len() != order + 1 {
                return Err(NgramError::parse(
                    ln,
                    format!("count line needs {} fields, found {}", order + 1, fields.len()),
                ));
            }
            let mut context = Vec::with_capacity(order - 1);
            for f in &fields[..order - 1] {
                context.push(unescape(f, ln)?);
            }
            let token = unescape(fields[order - 1], ln)?;
            let n: u64 = fields[order]
                .parse()
                .map_err(|_| NgramError::parse(ln, "count must be a non-negative integer"))?;
            *counts
                .entry(context.clone())
                .or_default()
                .entry(token)
                .or_insert(0) += n;
            *totals.entry(context).or_insert(0) += n;
        }
        for reserved in [START_TOKEN, END_TOKEN, UNK_TOKEN] {
            if !vocab.contains(reserved) {
                return Err(NgramError::parse(0, format!("vocabulary is missing {reserved}")));
            }
        }
        Ok(Self {
            order,
            alpha,
            smoothed,
            tokenizer: TokenizerConfig { lowercase },
            vocab,
            counts,
            totals,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NgramError> {
        write_model_file(path.as_ref(), &self.to_text())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NgramError> {
        Self::from_text(&read_model_file(path.as_ref())?)
    }
}

impl SequenceScorer for WordNgramLm {
    fn sequence_score(&self, text: &str) -> SequenceScore {
        self.sequence_log_prob(text)
    }
}
