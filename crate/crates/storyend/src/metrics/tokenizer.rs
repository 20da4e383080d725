//! Word tokenization shared by every metric and the word language model.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub lowercase: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self { lowercase: true }
    }
}

/// Splits text into word and punctuation tokens.
///
/// A word is a run of alphanumeric characters, possibly containing
/// apostrophes with alphanumerics on both sides, so "Dan's" stays one
/// token. Every other non-whitespace character becomes its own token.
/// Deterministic and total: any input, including empty, tokenizes.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    let source = if config.lowercase {
        text.to_lowercase()
    } else {
        text.to_string()
    };
    let chars: Vec<char> = source.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_alphanumeric() {
            let mut word = String::new();
            word.push(c);
            let mut j = i + 1;
            while j < chars.len() {
                let d = chars[j];
                if d.is_alphanumeric() {
                    word.push(d);
                    j += 1;
                } else if d == '\'' && j + 1 < chars.len() && chars[j + 1].is_alphanumeric() {
                    word.push(d);
                    j += 1;
                } else {
                    break;
                }
            }
            tokens.push(word);
            i = j;
        } else {
            tokens.push(c.to_string());
            i += 1;
        }
    }
    tokens
}
