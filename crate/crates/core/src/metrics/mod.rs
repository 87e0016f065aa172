//! Objective evaluation metrics.

mod agreement;
mod bleu;
mod sentiment;

use thiserror::Error;

use crate::langmodel::{LanguageModel, LmError};

pub use agreement::{cohen_kappa, pearson, Kappa};
pub use bleu::{bleu, ngram_diff, ngrams, BleuScore, BLEU_EPSILON};
pub use sentiment::{
    mean_valence, SentimentLabel, SentimentLexicon, SentimentVerdict, BOOSTERS, NEGATORS, NEUTRAL_THRESHOLD,
};

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("{0} needs a non-empty input")]
    Empty(&'static str),
    #[error("sequence {0} is empty")]
    EmptySequence(usize),
    #[error("inputs differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("pearson correlation needs at least 2 points")]
    TooFewPoints,
    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),
    #[error("chance agreement is 1 but the raters disagree")]
    DegenerateKappa,
    #[error("model assigned zero probability to a token")]
    ZeroProbability,
    #[error("language model error: {0}")]
    Lm(String),
}

impl From<LmError> for MetricError {
    fn from(e: LmError) -> Self {
        MetricError::Lm(e.to_string())
    }
}

/// Corpus-pooled perplexity: `exp(-sum(log p) / N)` where `N` counts every
/// token plus one EOS per sequence.
pub fn perplexity<M, S>(model: &M, corpus: &[Vec<S>]) -> Result<f64, MetricError>
where
    M: LanguageModel + ?Sized,
    S: AsRef<str>,
{
    if corpus.is_empty() {
        return Err(MetricError::Empty("perplexity"));
    }
    let vocab = model.vocab();
    let mut logprob = 0.0;
    let mut count = 0usize;
    for (i, seq) in corpus.iter().enumerate() {
        if seq.is_empty() {
            return Err(MetricError::EmptySequence(i));
        }
        let ids: Vec<_> = seq.iter().map(|t| vocab.id_or_unk(t.as_ref())).collect();
        let lp = model.sequence_logprob(&ids)?;
        if !lp.is_finite() {
            return Err(MetricError::ZeroProbability);
        }
        logprob += lp;
        count += ids.len() + 1;
    }
    Ok((-logprob / count as f64).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::langmodel::{TokenDistribution, TokenId, UniformModel, Vocabulary, EOS_ID};

    fn seqs(lines: &[&str]) -> Vec<Vec<String>> {
        lines
            .iter()
            .map(|l| l.split_whitespace().map(String::from).collect())
            .collect()
    }

    #[test]
    fn uniform_perplexity_is_vocab_size() {
        let vocab = Vocabulary::from_tokens(["a", "b", "c"]);
        let v = vocab.len() as f64;
        let m = UniformModel::new(vocab);
        let ppl = perplexity(&m, &seqs(&["a b", "c", "zzz a b c"])).unwrap();
        assert!((ppl - v).abs() < 1e-9);
    }

    /// Fixed per-position probabilities (0.5, 0.25, 0.25) then EOS at 0.5.
    struct Scripted {
        vocab: Vocabulary,
    }

    impl LanguageModel for Scripted {
        fn vocab(&self) -> &Vocabulary {
            &self.vocab
        }
        fn next_distribution(&self, context: &[TokenId]) -> Result<TokenDistribution, LmError> {
            // vocab: 4 reserved + x, y, z
            let mut p = vec![0.0; 7];
            match context.len() {
                0 => {
                    p[4] = 0.5;
                    p[5] = 0.5;
                }
                1 | 2 => {
                    p[5] = 0.25;
                    p[6] = 0.25;
                    p[4] = 0.5;
                }
                _ => {
                    p[EOS_ID.index()] = 0.5;
                    p[4] = 0.5;
                }
            }
            TokenDistribution::new(p)
        }
    }

    #[test]
    fn hand_built_perplexity() {
        let m = Scripted {
            vocab: Vocabulary::from_tokens(["x", "y", "z"]),
        };
        let ppl = perplexity(&m, &seqs(&["x y z"])).unwrap();
        let expected = (-(0.5f64.ln() + 0.25f64.ln() + 0.25f64.ln() + 0.5f64.ln()) / 4.0).exp();
        assert!((ppl - expected).abs() < 1e-12);
        assert!((ppl - 2.8284).abs() < 1e-4);
    }

    #[test]
    fn perplexity_errors() {
        let m = UniformModel::new(Vocabulary::from_tokens(["a"]));
        let empty: Vec<Vec<String>> = vec![];
        assert_eq!(perplexity(&m, &empty), Err(MetricError::Empty("perplexity")));
        assert_eq!(perplexity(&m, &seqs(&["a", ""])), Err(MetricError::EmptySequence(1)));
    }

    #[test]
    fn perplexity_at_least_one() {
        let corpus = seqs(&["a b a", "b b"]);
        let m =
            crate::langmodel::NGramModel::train(&corpus, crate::langmodel::TrainConfig::with_order(2, 0.01)).unwrap();
        assert!(perplexity(&m, &corpus).unwrap() >= 1.0);
    }
}
