//! Embedding-similarity score: greedy max-cosine token matching.

use super::PrecisionRecallF1;
use crate::embeddings::{cosine, EmbeddingError, EmbeddingProvider};

/// Greedy embedding match. Precision averages, over candidate tokens, the
/// best cosine similarity to any reference token; recall is the mirror
/// image; F1 is their harmonic mean. No IDF weighting, no rescaling.
///
/// Both sides are embedded through a single provider call so their vectors
/// share one dimension even for providers with session state.
pub fn bert_score(
    candidate: &[String],
    reference: &[String],
    provider: &dyn EmbeddingProvider,
) -> Result<PrecisionRecallF1, EmbeddingError> {
    if candidate.is_empty() || reference.is_empty() {
        return Ok(PrecisionRecallF1::ZERO);
    }
    let mut combined = candidate.to_vec();
    combined.extend_from_slice(reference);
    let matrix = provider.embed_tokens(&combined)?;
    let (cand_vecs, ref_vecs) = matrix.vectors.split_at(candidate.len());

    let precision = mean_best(cand_vecs, ref_vecs)?;
    let recall = mean_best(ref_vecs, cand_vecs)?;
    Ok(PrecisionRecallF1::from_pr(precision, recall))
}

fn mean_best(from: &[Vec<f64>], against: &[Vec<f64>]) -> Result<f64, EmbeddingError> {
    let mut sum = 0.0;
    for u in from {
        let mut best = f64::NEG_INFINITY;
        for v in against {
            best = best.max(cosine(u, v)?);
        }
        sum += best;
    }
    Ok(sum / from.len() as f64)
}
