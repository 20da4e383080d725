//! Character and word n-gram language models.
//!
//! [`CharNgramModel`] generates endings character by character with
//! longest-suffix backoff; [`WordNgramLm`] scores token sequences with
//! additive smoothing and backs the perplexity metric. Both serialize to a
//! versioned flat text format that round-trips bit-exactly: lines are
//! sorted and every token is escaped, so equal models produce equal bytes.

mod char_lm;
mod word_lm;

pub use char_lm::{CharNgramModel, SENTENCE_TERMINATORS};
pub use word_lm::{WordNgramLm, END_TOKEN, START_TOKEN, UNK_TOKEN};

use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum NgramError {
    #[error("order must be at least {min}, got {got}")]
    Order { min: usize, got: usize },
    #[error("cannot fit a model on an empty corpus")]
    EmptyCorpus,
    #[error("smoothing alpha must be a finite positive value, got {0}")]
    Alpha(f64),
    #[error("cannot read {path}: {source}")]
    Read {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("model file line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl NgramError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Self::Parse {
            line,
            message: message.into(),
        }
    }
}

pub(crate) fn read_model_file(path: &Path) -> Result<String, NgramError> {
    std::fs::read_to_string(path).map_err(|source| NgramError::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_model_file(path: &Path, content: &str) -> Result<(), NgramError> {
    std::fs::write(path, content).map_err(|source| NgramError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Escapes a token for the flat model format: backslash, space, and the
/// three ASCII whitespace controls get two-character escapes, everything
/// else passes through. Escaped tokens never contain a literal space, so
/// fields split cleanly on single spaces.
pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            ' ' => out.push_str("\\s"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            other => out.push(other),
        }
    }
    out
}

pub(crate) fn unescape(s: &str, line: usize) -> Result<String, NgramError> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('s') => out.push(' '),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('t') => out.push('\t'),
            other => {
                return Err(NgramError::parse(
                    line,
                    format!("bad escape sequence \\{}", other.map(String::from).unwrap_or_default()),
                ))
            }
        }
    }
    Ok(out)
}
