//! Character-level n-gram model with longest-suffix backoff.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::{escape, read_model_file, unescape, write_model_file, NgramError};
use crate::rng::SplitMix64;

/// Characters that end a generated sentence.
pub const SENTENCE_TERMINATORS: [char; 3] = ['.', '!', '?'];

/// Order-k character model: predicts the next character from the previous
/// k-1. Counts are kept for every context length from 0 to k-1, gathered
/// within each training text separately, so no n-gram ever spans a story
/// boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharNgramModel {
    order: usize,
    /// tables[len] maps a context of `len` chars to its successor counts.
    tables: Vec<BTreeMap<String, BTreeMap<char, u64>>>,
    alphabet: BTreeSet<char>,
}

impl CharNgramModel {
    /// Counts character n-grams of every order up to `order` over the
    /// texts. Requires order >= 2 and at least one non-empty text.
    pub fn fit<S: AsRef<str>>(texts: &[S], order: usize) -> Result<Self, NgramError> {
        if order < 2 {
            return Err(NgramError::Order { min: 2, got: order });
        }
        let mut tables = vec![BTreeMap::new(); order];
        let mut alphabet = BTreeSet::new();
        for text in texts {
            let chars: Vec<char> = text.as_ref().chars().collect();
            alphabet.extend(chars.iter().copied());
            for (len, table) in tables.iter_mut().enumerate() {
                for i in len..chars.len() {
                    let context: String = chars[i - len..i].iter().collect();
                    *table
                        .entry(context)
                        .or_insert_with(BTreeMap::new)
                        .entry(chars[i])
                        .or_insert(0) += 1;
                }
            }
        }
        if alphabet.is_empty() {
            return Err(NgramError::EmptyCorpus);
        }
        Ok(Self {
            order,
            tables,
            alphabet,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alphabet(&self) -> &BTreeSet<char> {
        &self.alphabet
    }

    /// Distribution over the next character, sorted by character.
    ///
    /// Tries the longest usable suffix of `context` first and backs off one
    /// character at a time; if no context of any length was ever seen, the
    /// distribution is uniform over the alphabet. Probabilities sum to 1
    /// whenever the model is non-degenerate.
    pub fn next_char_distribution(&self, context: &str) -> Vec<(char, f64)> {
        let chars: Vec<char> = context.chars().collect();
        let longest = chars.len().min(self.order - 1);
        for len in (0..=longest).rev() {
            let suffix: String = chars[chars.len() - len..].iter().collect();
            if let Some(successors) = self.tables[len].get(&suffix) {
                let total: u64 = successors.values().sum();
                return successors
                    .iter()
                    .map(|(&c, &n)| (c, n as f64 / total as f64))
                    .collect();
            }
        }
        let p = 1.0 / self.alphabet.len().max(1) as f64;
        self.alphabet.iter().map(|&c| (c, p)).collect()
    }

    /// Samples characters until a sentence terminator or `max_chars`
    /// characters, whichever comes first. `prime` seeds the context window
    /// but is not part of the return value.
    pub fn generate_sentence(
        &self,
        rng: &mut SplitMix64,
        prime: Option<&str>,
        max_chars: usize,
    ) -> String {
        let prime: Vec<char> = prime.unwrap_or("").chars().collect();
        let mut out: Vec<char> = Vec::new();
        while out.len() < max_chars {
            let window = self.order - 1;
            let total = prime.len() + out.len();
            let start = total.saturating_sub(window);
            let context: String = prime
                .iter()
                .chain(out.iter())
                .skip(start)
                .collect();
            let dist = self.next_char_distribution(&context);
            let Some(c) = sample(&dist, rng) else { break };
            out.push(c);
            if SENTENCE_TERMINATORS.contains(&c) {
                break;
            }
        }
        out.into_iter().collect()
    }

    /// Flat text serialization, versioned and byte-deterministic: header,
    /// sorted alphabet, then one sorted `count` line per (context, char).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("charlm 1\n");
        out.push_str(&format!("order {}\n", self.order));
        let alphabet: String = self.alphabet.iter().collect();
        out.push_str(&format!("alphabet {}\n", escape(&alphabet)));
        for table in &self.tables {
            for (context, successors) in table {
                for (&c, &n) in successors {
                    out.push_str(&format!(
                        "count {} {} {}\n",
                        escape(context),
                        escape(&c.to_string()),
                        n
                    ));
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, NgramError> {
        let mut lines = text.lines().enumerate();
        let expect = |pair: Option<(usize, &str)>, what: &str| -> Result<(usize, String), NgramError> {
            pair.map(|(i, l)| (i + 1, l.to_string()))
                .ok_or_else(|| NgramError::parse(0, format!("missing {what} line")))
        };

        let (ln, header) = expect(lines.next(), "header")?;
        if header != "charlm 1" {
            return Err(NgramError::parse(ln, format!("expected \"charlm 1\", got {header:?}")));
        }
        let (ln, order_line) = expect(lines.next(), "order")?;
        let order: usize = order_line
            .strip_prefix("order ")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| NgramError::parse(ln, "expected \"order <k>\""))?;
        if order < 2 {
            return Err(NgramError::Order { min: 2, got: order });
        }
        let (ln, alpha_line) = expect(lines.next(), "alphabet")?;
        let alphabet_raw = alpha_line
            .strip_prefix("alphabet ")
            .ok_or_else(|| NgramError::parse(ln, "expected \"alphabet <chars>\""))?;
        let alphabet: BTreeSet<char> = unescape(alphabet_raw, ln)?.chars().collect();

        let mut tables = vec![BTreeMap::new(); order];
        for (i, line) in lines {
            let ln = i + 1;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(' ').collect();
            if fields.len() != 4 || fields[0] != "count" {
                return Err(NgramError::parse(ln, "expected \"count <context> <char> <n>\""));
            }
            let context = unescape(fields[1], ln)?;
            let ch_str = unescape(fields[2], ln)?;
            let mut ch_iter = ch_str.chars();
            let (Some(c), None) = (ch_iter.next(), ch_iter.next()) else {
                return Err(NgramError::parse(ln, "char field must hold exactly one character"));
            };
            let n: u64 = fields[3]
                .parse()
                .map_err(|_| NgramError::parse(ln, "count must be a non-negative integer"))?;
            let len = context.chars().count();
            if len >= order {
                return Err(NgramError::parse(
                    ln,
                    format!("context of {len} chars is too long for order {order}"),
                ));
            }
            *tables[len]
                .entry(context)
                .or_insert_with(BTreeMap::new)
                .entry(c)
                .or_insert(0) += n;
        }
        Ok(Self {
            order,
            tables,
            alphabet,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NgramError> {
        write_model_file(path.as_ref(), &self.to_text())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NgramError> {
        Self::from_text(&read_model_file(path.as_ref())?)
    }
}

/// Inverse-CDF sampling over a sorted distribution. A draw landing past
/// the accumulated mass (floating-point slack) takes the last entry.
fn sample(dist: &[(char, f64)], rng: &mut SplitMix64) -> Option<char> {
    if dist.is_empty() {
        return None;
    }
    let u = rng.next_f64();
    let mut cum = 0.0;
    for &(c, p) in dist {
        cum += p;
        if u < cum {
            return Some(c);
        }
    }
    dist.last().map(|&(c, _)| c)
}
