use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MetricError;

/// Stand-in for a zero clipped count so higher orders do not zero the score.
pub const BLEU_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    pub score: f64,
    /// Modified precision per order; `None` when no candidate had an n-gram
    /// of that order.
    pub precisions: Vec<Option<f64>>,
    pub brevity_penalty: f64,
    pub candidate_len: usize,
    pub reference_len: usize,
}

pub fn ngrams<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for w in tokens.windows(n) {
        *counts.entry(w.iter().map(|t| t.as_ref()).collect()).or_insert(0) += 1;
    }
    counts
}

/// Corpus-level BLEU with one reference per candidate.
///
/// Clipped n-gram matches and candidate n-gram totals are pooled over the
/// corpus for each order. Orders where no candidate is long enough are left
/// out of the geometric mean; a zero match count is replaced by
/// [`BLEU_EPSILON`]. The brevity penalty is `exp(1 - r / c)` when `c < r`.
pub fn bleu<S: AsRef<str>>(
    candidates: &[Vec<S>],
    references: &[Vec<S>],
    max_n: usize,
) -> Result<BleuScore, MetricError> {
    if candidates.is_empty() {
        return Err(MetricError::Empty("bleu"));
    }
    if candidates.len() != references.len() {
        return Err(MetricError::LengthMismatch(candidates.len(), references.len()));
    }
    let max_n = max_n.max(1);
    let mut matched = vec![0usize; max_n];
    let mut totals = vec![0usize; max_n];
    let mut cand_len = 0;
    let mut ref_len = 0;
    for (cand, reference) in candidates.iter().zip(references) {
        cand_len += cand.len();
        ref_len += reference.len();
        for n in 1..=max_n {
            let ref_counts = ngrams(reference, n);
            for (gram, count) in ngrams(cand, n) {
                totals[n - 1] += count;
                matched[n - 1] += count.min(ref_counts.get(&gram).copied().unwrap_or(0));
            }
        }
    }

    let precisions: Vec<Option<f64>> = matched
        .iter()
        .zip(&totals)
        .map(|(m, t)| {
            (*t > 0).then(|| {
                let m = if *m == 0 { BLEU_EPSILON } else { *m as f64 };
                m / *t as f64
            })
        })
        .collect();
    let used: Vec<f64> = precisions.iter().flatten().copied().collect();

    let brevity_penalty = if cand_len == 0 {
        if ref_len == 0 {
            1.0
        } else {
            0.0
        }
    } else if cand_len < ref_len {
        (1.0 - ref_len as f64 / cand_len as f64).exp()
    } else {
        1.0
    };
    let score = if used.is_empty() {
        if cand_len == 0 && ref_len == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        let log_mean = used.iter().map(|p| p.ln()).sum::<f64>() / used.len() as f64;
        brevity_penalty * log_mean.exp()
    };
    Ok(BleuScore {
        score,
        precisions,
        brevity_penalty,
        candidate_len: cand_len,
        reference_len: ref_len,
    })
}

/// Size of the multiset symmetric difference of the n-grams of `a` and `b`.
pub fn ngram_diff<S: AsRef<str>>(a: &[S], b: &[S], n: usize) -> usize {
    let ca = ngrams(a, n);
    let cb = ngrams(b, n);
    let mut diff = 0;
    for (gram, x) in &ca {
        diff += x.abs_diff(cb.get(gram).copied().unwrap_or(0));
    }
    for (gram, y) in &cb {
        if !ca.contains_key(gram) {
            diff += y;
        }
    }
    diff
}
