use std::collections::HashMap;

use super::vocab::{TokenId, Vocabulary, BOS_ID, EOS_ID};
use super::{LanguageModel, LmError, TokenDistribution};

/// Weight applied per skipped order when a context was never observed.
pub const DEFAULT_BACKOFF: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub order: usize,
    pub delta: f64,
    /// Tokens seen fewer times than this become UNK. 1 disables the mapping.
    pub min_count: u64,
    pub backoff: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            order: 3,
            delta: 0.01,
            min_count: 1,
            backoff: DEFAULT_BACKOFF,
        }
    }
}

impl TrainConfig {
    pub fn with_order(order: usize, delta: f64) -> Self {
        TrainConfig {
            order,
            delta,
            ..Default::default()
        }
    }

    pub(crate) fn validate(&self) -> Result<(), LmError> {
        if !(1..=5).contains(&self.order) {
            return Err(LmError::InvalidOrder(self.order));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(LmError::InvalidDelta(self.delta));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct ContextCounts {
    pub(crate) total: u64,
    pub(crate) next: HashMap<TokenId, u64>,
}

/// Add-delta smoothed n-gram model.
///
/// For the longest observed context `h` of up to `order - 1` tokens,
/// `P(w | h) = (c(h, w) + delta) / (c(h) + delta * V)` over the whole
/// vocabulary. Unobserved contexts back off to shorter ones; the result is
/// renormalized, so every returned distribution sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    pub(crate) config: TrainConfig,
    pub(crate) vocab: Vocabulary,
    /// `tables[n - 1]` maps contexts of length `n - 1` to continuation counts.
    pub(crate) tables: Vec<HashMap<Vec<TokenId>, ContextCounts>>,
}

impl NGramModel {
    pub fn train<S: AsRef<str>>(corpus: &[Vec<S>], config: TrainConfig) -> Result<Self, LmError> {
        config.validate()?;
        if corpus.is_empty() {
            return Err(LmError::EmptyCorpus);
        }
        let mut freq: HashMap<&str, u64> = HashMap::new();
        for seq in corpus {
            for tok in seq {
                *freq.entry(tok.as_ref()).or_default() += 1;
            }
        }
        let vocab = Vocabulary::from_tokens(freq.iter().filter(|(_, c)| **c >= config.min_count).map(|(t, _)| *t));
        let mut model = NGramModel {
            config,
            vocab,
            tables: vec![HashMap::new(); config.order],
        };
        for seq in corpus {
            let ids: Vec<TokenId> = seq.iter().map(|t| model.vocab.id_or_unk(t.as_ref())).collect();
            model.count_sequence(&ids);
        }
        Ok(model)
    }

    fn count_sequence(&mut self, ids: &[TokenId]) {
        let order = self.config.order;
        let padded = pad(order, ids, true);
        for pos in (order - 1)..padded.len() {
            let word = padded[pos];
            for n in 1..=order {
                let ctx = padded[pos + 1 - n..pos].to_vec();
                let entry = self.tables[n - 1].entry(ctx).or_default();
                entry.total += 1;
                *entry.next.entry(word).or_default() += 1;
            }
        }
    }

    pub(crate) fn add_ngram(&mut self, ngram: &[TokenId], count: u64) {
        let (word, ctx) = ngram.split_last().expect("non-empty n-gram");
        let entry = self.tables[ngram.len() - 1].entry(ctx.to_vec()).or_default();
        entry.total += count;
        *entry.next.entry(*word).or_default() += count;
    }

    pub fn order(&self) -> usize {
        self.config.order
    }

    pub fn delta(&self) -> f64 {
        self.config.delta
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// Number of training tokens, EOS markers included.
    pub fn token_count(&self) -> u64 {
        self.tables[0].get(&Vec::new()).map_or(0, |c| c.total)
    }

    /// Token ids for a token sequence, UNK for anything out of vocabulary.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<TokenId> {
        tokens.iter().map(|t| self.vocab.id_or_unk(t.as_ref())).collect()
    }

    fn check_context(&self, context: &[TokenId]) -> Result<(), LmError> {
        match context.iter().find(|id| !self.vocab.contains_id(**id)) {
            Some(bad) => Err(LmError::UnknownTokenId(bad.0)),
            None => Ok(()),
        }
    }

    /// The longest observed suffix of the context, with the number of orders
    /// skipped to reach it.
    fn resolve(&self, context: &[TokenId]) -> (&ContextCounts, usize) {
        let order = self.config.order;
        let padded = pad(order, context, false);
        let tail = &padded[padded.len() - (order - 1)..];
        for n in (1..=order).rev() {
            let ctx = &tail[tail.len() - (n - 1)..];
            if let Some(counts) = self.tables[n - 1].get(ctx) {
                if counts.total > 0 {
                    return (counts, order - n);
                }
            }
        }
        unreachable!("unigram table is populated by training")
    }

    fn smoothed(&self, counts: &ContextCounts, word: TokenId) -> f64 {
        let v = self.vocab.len() as f64;
        let c = counts.next.get(&word).copied().unwrap_or(0) as f64;
        (c + self.config.delta) / (counts.total as f64 + self.config.delta * v)
    }
}

/// Left-pads with `order - 1` BOS tokens, optionally appending EOS.
fn pad(order: usize, ids: &[TokenId], eos: bool) -> Vec<TokenId> {
    let mut padded = vec![BOS_ID; order - 1];
    padded.extend_from_slice(ids);
    if eos {
        padded.push(EOS_ID);
    }
    padded
}

impl LanguageModel for NGramModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_distribution(&self, context: &[TokenId]) -> Result<TokenDistribution, LmError> {
        self.check_context(context)?;
        let (counts, skipped) = self.resolve(context);
        let weight = self.config.backoff.powi(skipped as i32);
        let scores = (0..self.vocab.len() as u32)
            .map(|i| weight * self.smoothed(counts, TokenId(i)))
            .collect();
        TokenDistribution::from_scores(scores)
    }

    fn token_logprob(&self, context: &[TokenId], token: TokenId) -> Result<f64, LmError> {
        self.check_context(context)?;
        if !self.vocab.contains_id(token) {
            return Err(LmError::UnknownTokenId(token.0));
        }
        let (counts, _) = self.resolve(context);
        Ok(self.smoothed(counts, token).ln())
    }
}

/// A model that spreads probability evenly over its vocabulary.
#[derive(Debug, Clone)]
pub struct UniformModel {
    vocab: Vocabulary,
}

impl UniformModel {
    pub fn new(vocab: Vocabulary) -> Self {
        UniformModel { vocab }
    }
}

impl LanguageModel for UniformModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_distribution(&self, context: &[TokenId]) -> Result<TokenDistribution, LmError> {
        if let Some(bad) = context.iter().find(|id| !self.vocab.contains_id(**id)) {
            return Err(LmError::UnknownTokenId(bad.0));
        }
        let v = self.vocab.len();
        TokenDistribution::new(vec![1.0 / v as f64; v])
    }
}

/// A model that returns the same distribution whatever the context.
#[derive(Debug, Clone)]
pub struct FixedModel {
    vocab: Vocabulary,
    dist: TokenDistribution,
}

impl FixedModel {
    pub fn new(vocab: Vocabulary, dist: TokenDistribution) -> Result<Self, LmError> {
        if dist.len() != vocab.len() {
            return Err(LmError::InvalidDistribution(format!(
                "{} probabilities for a vocabulary of {}",
                dist.len(),
                vocab.len()
            )));
        }
        Ok(FixedModel { vocab, dist })
    }
}

impl LanguageModel for FixedModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_distribution(&self, context: &[TokenId]) -> Result<TokenDistribution, LmError> {
        if let Some(bad) = context.iter().find(|id| !self.vocab.contains_id(**id)) {
            return Err(LmError::UnknownTokenId(bad.0));
        }
        Ok(self.dist.clone())
    }
}
