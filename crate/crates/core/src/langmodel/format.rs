//! Text serialization for [`NGramModel`].
//!
//! ```text
//! affecton-ngram 1
//! order 3
//! delta 0.01
//! backoff 0.4
//! min_count 1
//! vocab <V>
//! <one token per line, in id order; ids 0..4 are the reserved tokens>
//! ngrams <N>
//! <n> <id_1> ... <id_n> <count>
//! ```
//!
//! N-gram lines are sorted by order, then by ids, so saving the same model
//! always produces the same bytes.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::ngram::{NGramModel, TrainConfig};
use super::vocab::{TokenId, Vocabulary};
use super::LmError;

pub const MAGIC: &str = "affecton-ngram";
pub const FORMAT_VERSION: u32 = 1;

impl NGramModel {
    pub fn save<W: Write>(&self, mut out: W) -> Result<(), LmError> {
        let c = &self.config;
        writeln!(out, "{MAGIC} {FORMAT_VERSION}")?;
        writeln!(out, "order {}", c.order)?;
        writeln!(out, "delta {}", c.delta)?;
        writeln!(out, "backoff {}", c.backoff)?;
        writeln!(out, "min_count {}", c.min_count)?;
        writeln!(out, "vocab {}", self.vocab.len())?;
        for tok in self.vocab.tokens() {
            writeln!(out, "{tok}")?;
        }
        let mut ngrams: Vec<(Vec<TokenId>, u64)> = Vec::new();
        for table in &self.tables {
            for (ctx, counts) in table {
                for (word, count) in &counts.next {
                    let mut gram = ctx.clone();
                    gram.push(*word);
                    ngrams.push((gram, *count));
                }
            }
        }
        ngrams.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
        writeln!(out, "ngrams {}", ngrams.len())?;
        for (gram, count) in ngrams {
            write!(out, "{}", gram.len())?;
            for id in gram {
                write!(out, " {id}")?;
            }
            writeln!(out, " {count}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load<R: BufRead>(reader: R) -> Result<Self, LmError> {
        let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| -> Result<(usize, String), LmError> {
            match lines.next() {
                Some((n, Ok(l))) => Ok((n, l.trim_end_matches('\r').to_string())),
                Some((_, Err(e))) => Err(e.into()),
                None => Err(LmError::Format {
                    line: 0,
                    reason: format!("unexpected end of file, expected {what}"),
                }),
            }
        };
        let bad = |line: usize, reason: String| LmError::Format { line, reason };

        let (n, header) = next("header")?;
        let version = header
            .strip_prefix(MAGIC)
            .map(str::trim)
            .ok_or_else(|| bad(n, "missing model header".into()))?;
        if version.parse::<u32>().ok() != Some(FORMAT_VERSION) {
            return Err(bad(n, format!("unsupported format version {version:?}")));
        }

        fn field<T: std::str::FromStr>(line: (usize, String), key: &str) -> Result<T, LmError> {
            let (n, text) = line;
            text.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(' '))
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| LmError::Format {
                    line: n,
                    reason: format!("expected `{key} <value>`"),
                })
        }

        let config = TrainConfig {
            order: field(next("order")?, "order")?,
            delta: field(next("delta")?, "delta")?,
            backoff: field(next("backoff")?, "backoff")?,
            min_count: field(next("min_count")?, "min_count")?,
        };
        config.validate()?;
        let vocab_len: usize = field(next("vocab")?, "vocab")?;
        let mut tokens = Vec::with_capacity(vocab_len);
        for _ in 0..vocab_len {
            tokens.push(next("token")?.1);
        }
        let vocab = Vocabulary::from_ordered(tokens)
            .ok_or_else(|| bad(6, "vocabulary must start with reserved tokens and be unique".into()))?;

        let ngram_count: usize = field(next("ngrams")?, "ngrams")?;
        let mut model = NGramModel {
            config,
            vocab,
            tables: vec![HashMap::new(); config.order],
        };
        for _ in 0..ngram_count {
            let (n, line) = next("n-gram")?;
            let nums: Vec<u64> = line
                .split(' ')
                .map(|f| f.parse::<u64>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad(n, "unparsable n-gram line".into()))?;
            let order = *nums.first().ok_or_else(|| bad(n, "empty n-gram line".into()))? as usize;
            if order == 0 || order > config.order || nums.len() != order + 2 {
                return Err(bad(n, format!("n-gram of order {order} has {} fields", nums.len())));
            }
            let gram: Vec<TokenId> = nums[1..=order].iter().map(|i| TokenId(*i as u32)).collect();
            if let Some(unknown) = gram.iter().find(|id| !model.vocab.contains_id(**id)) {
                return Err(LmError::UnknownTokenId(unknown.0));
            }
            model.add_ngram(&gram, nums[order + 1]);
        }
        if model.token_count() == 0 {
            return Err(bad(0, "model has no unigram counts".into()));
        }
        Ok(model)
    }
}
