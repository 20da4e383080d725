//! Sentence-level BLEU with a single reference and no smoothing.

use std::collections::HashMap;

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts: HashMap<&[String], usize> = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Modified n-gram precision: candidate n-gram counts clipped by their
/// reference counts. Returns (matched, total candidate n-grams).
fn modified_precision(candidate: &[String], reference: &[String], n: usize) -> (usize, usize) {
    let cand = ngram_counts(candidate, n);
    let refr = ngram_counts(reference, n);
    let matched = cand
        .iter()
        .map(|(gram, &c)| c.min(refr.get(gram).copied().unwrap_or(0)))
        .sum();
    let total = candidate.len().saturating_sub(n - 1);
    (matched, total)
}

/// BLEU for one candidate against one reference.
///
/// Geometric mean of clipped modified precisions for orders 1 through
/// `min(max_n, candidate length)`, times the brevity penalty
/// `exp(1 - |ref|/|cand|)` when the candidate is shorter than the
/// reference. No smoothing: a zero numerator at any order zeroes the
/// score, as does an empty candidate or reference.
pub fn bleu(candidate: &[String], reference: &[String], max_n: usize) -> f64 {
    assert!(max_n >= 1, "bleu requires max_n >= 1");
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let top = max_n.min(candidate.len());
    let mut log_sum = 0.0;
    for n in 1..=top {
        let (matched, total) = modified_precision(candidate, reference, n);
        if matched == 0 {
            return 0.0;
        }
        log_sum += (matched as f64 / total as f64).ln();
    }
    let geo_mean = (log_sum / top as f64).exp();
    let bp = if candidate.len() < reference.len() {
        (1.0 - reference.len() as f64 / candidate.len() as f64).exp()
    } else {
        1.0
    };
    bp * geo_mean
}
