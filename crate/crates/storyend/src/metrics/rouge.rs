//! ROUGE-N (n-gram recall/precision overlap) and ROUGE-L (longest common
//! subsequence).

use std::collections::HashMap;

use super::PrecisionRecallF1;

/// ROUGE-N: clipped multiset n-gram overlap. Precision divides by the
/// candidate's n-gram count, recall by the reference's. A side shorter
/// than `n` contributes zero n-grams, which zeroes its scores.
pub fn rouge_n(candidate: &[String], reference: &[String], n: usize) -> PrecisionRecallF1 {
    assert!(n >= 1, "rouge_n requires n >= 1");
    let mut cand: HashMap<&[String], usize> = HashMap::new();
    if candidate.len() >= n {
        for gram in candidate.windows(n) {
            *cand.entry(gram).or_insert(0) += 1;
        }
    }
    let mut refr: HashMap<&[String], usize> = HashMap::new();
    if reference.len() >= n {
        for gram in reference.windows(n) {
            *refr.entry(gram).or_insert(0) += 1;
        }
    }
    let overlap: usize = cand
        .iter()
        .map(|(gram, &c)| c.min(refr.get(gram).copied().unwrap_or(0)))
        .sum();
    let cand_total = candidate.len().saturating_sub(n - 1);
    let ref_total = reference.len().saturating_sub(n - 1);
    let precision = ratio(overlap, cand_total);
    let recall = ratio(overlap, ref_total);
    PrecisionRecallF1::from_pr(precision, recall)
}

/// ROUGE-L: precision and recall of the longest common subsequence length
/// against each side's token count.
pub fn rouge_l(candidate: &[String], reference: &[String]) -> PrecisionRecallF1 {
    let lcs = lcs_length(candidate, reference);
    let precision = ratio(lcs, candidate.len());
    let recall = ratio(lcs, reference.len());
    PrecisionRecallF1::from_pr(precision, recall)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Longest common subsequence length by the standard dynamic program,
/// keeping one row of the table at a time.
pub(crate) fn lcs_length(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            curr[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(curr[j])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn unigram_overlap_with_one_substitution() {
        let cand = t(&["the", "cat", "sat"]);
        let refr = t(&["the", "cat", "slept"]);
        let r = rouge_n(&cand, &refr, 1);
        assert!((r.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn repeated_tokens_are_clipped() {
        let cand = t(&["a", "a", "a"]);
        let refr = t(&["a", "b"]);
        let r = rouge_n(&cand, &refr, 1);
        assert!((r.precision - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.recall - 1.0 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn side_shorter_than_n_scores_zero() {
        let cand = t(&["single"]);
        let refr = t(&["two", "words"]);
        let r = rouge_n(&cand, &refr, 2);
        assert_eq!(r, PrecisionRecallF1::ZERO);
    }

    #[test]
    fn no_overlap_gives_zero_f1_not_nan() {
        let r = rouge_n(&t(&["x"]), &t(&["y"]), 1);
        assert_eq!(r, PrecisionRecallF1::ZERO);
    }

    #[test]
    fn reversal_leaves_single_token_subsequence() {
        let cand = t(&["c", "b", "a"]);
        let refr = t(&["a", "b", "c"]);
        let r = rouge_l(&cand, &refr);
        assert!((r.precision - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.recall - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.f1 - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn lcs_handles_identity_and_disjoint() {
        let s = t(&["a", "b", "c", "d"]);
        assert_eq!(lcs_length(&s, &s), 4);
        assert_eq!(lcs_length(&s, &t(&["x", "y"])), 0);
        assert_eq!(lcs_length(&s, &[]), 0);
        assert_eq!(lcs_length(&t(&["a", "x", "b", "y", "c"]), &t(&["a", "b", "c"])), 3);
    }

    #[test]
    fn precision_and_recall_swap_under_argument_swap() {
        let a = t(&["the", "cat", "sat", "down"]);
        let b = t(&["the", "dog", "sat"]);
        for n in 1..=2 {
            let fwd = rouge_n(&a, &b, n);
            let rev = rouge_n(&b, &a, n);
            assert_eq!(fwd.precision, rev.recall);
            assert_eq!(fwd.recall, rev.precision);
            assert_eq!(fwd.f1, rev.f1);
        }
        let fwd = rouge_l(&a, &b);
        let rev = rouge_l(&b, &a);
        assert_eq!(fwd.precision, rev.recall);
        assert_eq!(fwd.f1, rev.f1);
    }
}
