//! Probabilistic language model contract and a smoothed n-gram implementation.
//!
//! The decoder only needs [`LanguageModel::next_distribution`] and vocabulary
//! access, so any model that can produce a full next-token distribution can be
//! steered.

mod format;
mod ngram;
mod vocab;

use std::io;

use thiserror::Error;

pub use ngram::{FixedModel, NGramModel, TrainConfig, UniformModel, DEFAULT_BACKOFF};
pub use vocab::{TokenId, Vocabulary, BOS, BOS_ID, EOS, EOS_ID, SEP, SEP_ID, UNK, UNK_ID};

#[derive(Debug, Error)]
pub enum LmError {
    #[error("cannot train on an empty corpus")]
    EmptyCorpus,
    #[error("model order must be in [1, 5], got {0}")]
    InvalidOrder(usize),
    #[error("smoothing constant must be finite and positive, got {0}")]
    InvalidDelta(f64),
    #[error("token id {0} is not in the vocabulary")]
    UnknownTokenId(u32),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("model file line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Tolerance on the sum of a probability vector.
pub const PROB_SUM_TOLERANCE: f64 = 1e-9;

/// Probability vector over the full vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenDistribution {
    probs: Vec<f64>,
}

impl TokenDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, LmError> {
        if probs.is_empty() {
            return Err(LmError::InvalidDistribution("empty".into()));
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(LmError::InvalidDistribution(format!("entry {bad}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(LmError::InvalidDistribution(format!("sums to {sum}")));
        }
        Ok(TokenDistribution { probs })
    }

    /// Normalizes non-negative scores into a distribution.
    pub fn from_scores(scores: Vec<f64>) -> Result<Self, LmError> {
        let sum: f64 = scores.iter().sum();
        if !(sum.is_finite() && sum > 0.0) {
            return Err(LmError::InvalidDistribution(format!("score mass {sum}")));
        }
        Self::new(scores.into_iter().map(|s| s / sum).collect())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, id: TokenId) -> f64 {
        self.probs[id.index()]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Highest-probability token; ties go to the lowest id.
    pub fn argmax(&self) -> TokenId {
        let mut best = 0;
        for (i, p) in self.probs.iter().enumerate() {
            if *p > self.probs[best] {
                best = i;
            }
        }
        TokenId(best as u32)
    }
}

pub trait LanguageModel: Send + Sync {
    fn vocab(&self) -> &Vocabulary;

    /// Distribution of the next token given a context of token ids. An empty
    /// context means start of sequence.
    fn next_distribution(&self, context: &[TokenId]) -> Result<TokenDistribution, LmError>;

    /// Natural-log probability of one token after `context`.
    fn token_logprob(&self, context: &[TokenId], token: TokenId) -> Result<f64, LmError> {
        let dist = self.next_distribution(context)?;
        if token.index() >= dist.len() {
            return Err(LmError::UnknownTokenId(token.0));
        }
        Ok(dist.prob(token).ln())
    }

    /// Chain-rule log probability of `tokens` followed by EOS, starting from
    /// an all-BOS context.
    fn sequence_logprob(&self, tokens: &[TokenId]) -> Result<f64, LmError> {
        let mut total = 0.0;
        for (i, tok) in tokens.iter().chain(std::iter::once(&EOS_ID)).enumerate() {
            total += self.token_logprob(&tokens[..i], *tok)?;
        }
        Ok(total)
    }
}

/// `source ++ [SEP] ++ partial_response`, with out-of-vocabulary tokens
/// mapped to UNK.
pub fn encode_dialog_context<S: AsRef<str>, P: AsRef<str>>(
    vocab: &Vocabulary,
    source: &[S],
    partial_response: &[P],
) -> Vec<TokenId> {
    let mut ids = Vec::with_capacity(source.len() + partial_response.len() + 1);
    ids.extend(source.iter().map(|t| vocab.id_or_unk(t.as_ref())));
    ids.push(SEP_ID);
    ids.extend(partial_response.iter().map(|t| vocab.id_or_unk(t.as_ref())));
    ids
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distribution_validation() {
        assert!(TokenDistribution::new(vec![0.5, 0.5]).is_ok());
        assert!(TokenDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(TokenDistribution::new(vec![1.5, -0.5]).is_err());
        assert!(TokenDistribution::new(vec![]).is_err());
        assert!(TokenDistribution::from_scores(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn argmax_ties_go_low() {
        let d = TokenDistribution::new(vec![0.1, 0.45, 0.45]).unwrap();
        assert_eq!(d.argmax(), TokenId(1));
    }

    #[test]
    fn dialog_context_examples() {
        let vocab = Vocabulary::from_tokens(["hi", "hello", "there", "bye"]);
        let hi = vocab.id("hi").unwrap();
        let empty: [&str; 0] = [];
        assert_eq!(encode_dialog_context(&vocab, &["hi"], &empty), vec![hi, SEP_ID]);
        assert_eq!(
            encode_dialog_context(&vocab, &["hi"], &["hello", "there"]),
            vec![hi, SEP_ID, vocab.id("hello").unwrap(), vocab.id("there").unwrap()]
        );
        assert_ne!(
            encode_dialog_context(&vocab, &["hi"], &["there"]),
            encode_dialog_context(&vocab, &["bye"], &["there"])
        );
        assert_eq!(encode_dialog_context(&vocab, &["zzz"], &empty), vec![UNK_ID, SEP_ID]);
    }
}
