//! Suffix stripper backing the aligned unigram metric's second matching
//! stage. Deliberately tiny: a fixed rule list applied once, so matching
//! stays deterministic, cheap, and easy to reason about.

/// Strips common English suffixes. Rules in order, first match wins,
/// lengths counted in characters:
///
/// plural block: `sses` -> `ss`; `ies` -> `y` when the word has >= 5
/// chars; words ending `ss` keep it; a final `s` drops when the word has
/// >= 4 chars. Then one ending drops if long enough: `ing` (>= 6),
/// `ed` (>= 5), `ly` (>= 5).
pub fn stem(word: &str) -> String {
    let n = word.chars().count();
    let mut w = word.to_string();

    if w.ends_with("sses") {
        w.truncate(w.len() - 2);
    } else if w.ends_with("ies") && n >= 5 {
        w.truncate(w.len() - 3);
        w.push('y');
    } else if w.ends_with("ss") {
        // keep
    } else if w.ends_with('s') && n >= 4 {
        w.truncate(w.len() - 1);
    }

    let n = w.chars().count();
    if w.ends_with("ing") && n >= 6 {
        w.truncate(w.len() - 3);
    } else if w.ends_with("ed") && n >= 5 {
        w.truncate(w.len() - 2);
    } else if w.ends_with("ly") && n >= 5 {
        w.truncate(w.len() - 2);
    }
    w
}
