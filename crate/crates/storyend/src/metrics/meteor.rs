//! Aligned unigram matching with a fragmentation penalty.

use serde::{Deserialize, Serialize};

use super::stemmer::stem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeteorParams {
    /// Weight of precision in the harmonic mean.
    pub alpha: f64,
    /// Exponent on the chunk fragmentation ratio.
    pub beta: f64,
    /// Maximum penalty.
    pub gamma: f64,
}

impl Default for MeteorParams {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            beta: 3.0,
            gamma: 0.5,
        }
    }
}

/// Unigram-alignment score.
///
/// Tokens are aligned one-to-one in two stages, exact matches first and
/// equal-stem matches second. Within a stage candidate tokens are taken
/// left to right and each takes the first unmatched reference token, which
/// keeps same-stage alignments monotone and the chunk count minimal for
/// them. With `m` matches, precision `P = m/|cand|`, recall `R = m/|ref|`:
///
/// ```text
/// F_mean  = P*R / (alpha*P + (1-alpha)*R)
/// penalty = gamma * (chunks/m)^beta
/// score   = F_mean * (1 - penalty)
/// ```
///
/// Zero matches, or an empty side, score 0.
pub fn meteor(candidate: &[String], reference: &[String], params: &MeteorParams) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let pairs = align(candidate, reference);
    let m = pairs.len();
    if m == 0 {
        return 0.0;
    }
    let p = m as f64 / candidate.len() as f64;
    let r = m as f64 / reference.len() as f64;
    let f_mean = p * r / (params.alpha * p + (1.0 - params.alpha) * r);
    let chunks = count_chunks(&pairs);
    let penalty = params.gamma * (chunks as f64 / m as f64).powf(params.beta);
    f_mean * (1.0 - penalty)
}

/// (candidate index, reference index) pairs, sorted by candidate index.
fn align(candidate: &[String], reference: &[String]) -> Vec<(usize, usize)> {
    let mut cand_used = vec![false; candidate.len()];
    let mut ref_used = vec![false; reference.len()];
    let mut pairs = Vec::new();

    let stage = |eq: &dyn Fn(&str, &str) -> bool,
                     cand_used: &mut [bool],
                     ref_used: &mut [bool],
                     pairs: &mut Vec<(usize, usize)>| {
        for (ci, ct) in candidate.iter().enumerate() {
            if cand_used[ci] {
                continue;
            }
            for (ri, rt) in reference.iter().enumerate() {
                if !ref_used[ri] && eq(ct, rt) {
                    cand_used[ci] = true;
                    ref_used[ri] = true;
                    pairs.push((ci, ri));
                    break;
                }
            }
        }
    };

    stage(&|a, b| a == b, &mut cand_used, &mut ref_used, &mut pairs);
    stage(
        &|a, b| stem(a) == stem(b),
        &mut cand_used,
        &mut ref_used,
        &mut pairs,
    );
    pairs.sort_unstable();
    pairs
}

/// Number of maximal runs of adjacent pairs: a run continues while both
/// the candidate and the reference index advance by exactly one.
fn count_chunks(pairs: &[(usize, usize)]) -> usize {
    let mut chunks = 0;
    let mut prev: Option<(usize, usize)> = None;
    for &(ci, ri) in pairs {
        let contiguous = matches!(prev, Some((pc, pr)) if ci == pc + 1 && ri == pr + 1);
        if !contiguous {
            chunks += 1;
        }
        prev = Some((ci, ri));
    }
    chunks
}
