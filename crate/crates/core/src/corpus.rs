//! Dialog-pair ingestion, tokenization and corpus utilities.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decoder::StepTrace;
use crate::metrics::ngram_diff;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("split needs at least 2 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("train fraction must be in (0, 1), got {0}")]
    BadFraction(f64),
    #[error(transparent)]
    Io(#[from] io::Error),
}

const PUNCTUATION: [char; 7] = ['.', ',', '!', '?', '"', ';', ':'];
const CONTRACTIONS: [&str; 6] = ["n't", "'s", "'re", "'m", "'ll", "'ve"];

/// Lowercases, splits on whitespace and punctuation, and separates the
/// contraction suffixes `n't 's 're 'm 'll 've`.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let mut word = String::new();
        for c in chunk.to_lowercase().chars() {
            if PUNCTUATION.contains(&c) {
                push_word(&word, &mut out);
                word.clear();
                out.push(c.to_string());
            } else {
                word.push(c);
            }
        }
        push_word(&word, &mut out);
    }
    out
}

fn push_word(word: &str, out: &mut Vec<String>) {
    if word.is_empty() {
        return;
    }
    if CONTRACTIONS.contains(&word) || !word.contains('\'') {
        out.push(word.to_string());
        return;
    }
    for suffix in CONTRACTIONS {
        if let Some(stem) = word.strip_suffix(suffix) {
            if !stem.is_empty() && !stem.ends_with('\'') {
                push_word(stem, out);
                out.push(suffix.to_string());
                return;
            }
        }
    }
    let mut piece = String::new();
    for c in word.chars() {
        if c == '\'' {
            if !piece.is_empty() {
                out.push(std::mem::take(&mut piece));
            }
            out.push("'".to_string());
        } else {
            piece.push(c);
        }
    }
    if !piece.is_empty() {
        out.push(piece);
    }
}

/// Best-effort inverse of [`tokenize`]: punctuation and contraction suffixes
/// attach to the preceding token; reserved tokens are dropped.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut text = String::new();
    for tok in tokens {
        let tok = tok.as_ref();
        if tok.starts_with('<') && tok.ends_with('>') && tok.len() > 2 {
            continue;
        }
        let attach = CONTRACTIONS.contains(&tok) || (tok.chars().count() == 1 && ".,!?;:".contains(tok));
        if !text.is_empty() && !attach {
            text.push(' ');
        }
        text.push_str(tok);
    }
    text
}

/// One (utterance, response) exchange.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogPair {
    pub id: String,
    pub source: Vec<String>,
    pub response: Vec<String>,
    pub raw_source: String,
    pub raw_response: String,
}

impl DialogPair {
    pub fn new(id: &str, raw_source: &str, raw_response: &str) -> Self {
        let clean = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");
        let (raw_source, raw_response) = (clean(raw_source), clean(raw_response));
        DialogPair {
            id: id.to_string(),
            source: tokenize(&raw_source),
            response: tokenize(&raw_response),
            raw_source,
            raw_response,
        }
    }
}

fn read_lines<R: BufRead>(reader: R) -> impl Iterator<Item = (usize, io::Result<String>)> {
    reader.split(b'\n').enumerate().map(|(i, bytes)| {
        let line = bytes.map(|b| {
            let mut s = String::from_utf8_lossy(&b).into_owned();
            if s.ends_with('\r') {
                s.pop();
            }
            s
        });
        (i + 1, line)
    })
}

/// Reads `id<TAB>source<TAB>response` lines. Blank lines are ignored.
pub fn load_pairs_tsv<R: BufRead>(reader: R) -> Result<Vec<DialogPair>, CorpusError> {
    let mut pairs = Vec::new();
    for (line_no, line) in read_lines(reader) {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(CorpusError::Malformed {
                line: line_no,
                reason: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        if fields[0].trim().is_empty() {
            return Err(CorpusError::Malformed {
                line: line_no,
                reason: "empty pair id".into(),
            });
        }
        pairs.push(DialogPair::new(fields[0].trim(), fields[1], fields[2]));
    }
    Ok(pairs)
}

pub fn write_pairs_tsv<W: Write>(pairs: &[DialogPair], mut out: W) -> io::Result<()> {
    for p in pairs {
        writeln!(out, "{}\t{}\t{}", p.id, p.raw_source, p.raw_response)?;
    }
    Ok(())
}

const CORNELL_SEP: &str = " +++$+++ ";

/// Result of reading the Cornell movie-dialog layout.
#[derive(Debug, Clone, Default)]
pub struct CornellCorpus {
    pub pairs: Vec<DialogPair>,
    /// Adjacent utterances skipped because a line id was missing.
    pub missing_lines: usize,
}

/// Builds pairs from `movie_lines.txt` and `movie_conversations.txt`: every
/// two adjacent utterances of a conversation form one pair.
pub fn load_cornell<L: BufRead, C: BufRead>(lines: L, conversations: C) -> Result<CornellCorpus, CorpusError> {
    let mut text: HashMap<String, String> = HashMap::new();
    for (line_no, line) in read_lines(lines) {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.splitn(5, CORNELL_SEP).collect();
        if fields.len() != 5 {
            return Err(CorpusError::Malformed {
                line: line_no,
                reason: "movie_lines entry needs 5 ` +++$+++ `-separated fields".into(),
            });
        }
        text.insert(fields[0].trim().to_string(), fields[4].to_string());
    }

    let mut corpus = CornellCorpus::default();
    for (line_no, line) in read_lines(conversations) {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(CORNELL_SEP).collect();
        let malformed = || CorpusError::Malformed {
            line: line_no,
            reason: "conversation entry needs 4 fields ending in a ['L1', 'L2'] list".into(),
        };
        if fields.len() != 4 {
            return Err(malformed());
        }
        let list = fields[3].trim();
        let inner = list
            .strip_prefix('[')
            .and_then(|l| l.strip_suffix(']'))
            .ok_or_else(malformed)?;
        let ids: Vec<&str> = inner
            .split(',')
            .map(|s| s.trim().trim_matches(|c| c == '\'' || c == '"'))
            .filter(|s| !s.is_empty())
            .collect();
        for w in ids.windows(2) {
            match (text.get(w[0]), text.get(w[1])) {
                (Some(src), Some(resp)) => {
                    corpus
                        .pairs
                        .push(DialogPair::new(&format!("{}-{}", w[0], w[1]), src, resp));
                }
                _ => corpus.missing_lines += 1,
            }
        }
    }
    Ok(corpus)
}

/// Seeded shuffle, then the first `round(n * train_fraction)` pairs (at least
/// one, at most `n - 1`) become the training split.
pub fn split(
    pairs: &[DialogPair],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<DialogPair>, Vec<DialogPair>), CorpusError> {
    if pairs.len() < 2 {
        return Err(CorpusError::TooFewPairs(pairs.len()));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(CorpusError::BadFraction(train_fraction));
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = ((pairs.len() as f64 * train_fraction).round() as usize).clamp(1, pairs.len() - 1);
    let take = |idx: &[usize]| idx.iter().map(|i| pairs[*i].clone()).collect::<Vec<_>>();
    Ok((take(&order[..cut]), take(&order[cut..])))
}

/// A response rewritten toward a target affect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappedPair {
    pub id: String,
    pub target: String,
    pub original: Vec<String>,
    pub mapped: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub traces: Vec<StepTrace>,
}

impl MappedPair {
    pub fn changed(&self) -> bool {
        self.original != self.mapped
    }
}

/// Writes `id<TAB>target<TAB>original<TAB>mapped`, tokens joined by spaces.
pub fn write_mapped_tsv<W: Write>(mapped: &[MappedPair], mut out: W) -> io::Result<()> {
    for m in mapped {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            m.id,
            m.target,
            m.original.join(" "),
            m.mapped.join(" ")
        )?;
    }
    Ok(())
}

pub fn load_mapped_tsv<R: BufRead>(reader: R) -> Result<Vec<MappedPair>, CorpusError> {
    let mut out = Vec::new();
    for (line_no, line) in read_lines(reader) {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(CorpusError::Malformed {
                line: line_no,
                reason: format!("expected 4 tab-separated fields, found {}", fields.len()),
            });
        }
        let toks = |s: &str| s.split(' ').filter(|t| !t.is_empty()).map(String::from).collect();
        out.push(MappedPair {
            id: fields[0].to_string(),
            target: fields[1].to_string(),
            original: toks(fields[2]),
            mapped: toks(fields[3]),
            traces: Vec::new(),
        });
    }
    Ok(out)
}

/// The `n` pairs whose mapping differs most from the original by n-gram
/// symmetric difference; ties go to the smaller pair id.
pub fn select_most_changed(mapped: &[MappedPair], n: usize, ngram_n: usize) -> Vec<MappedPair> {
    let mut scored: Vec<(usize, &MappedPair)> = mapped
        .iter()
        .map(|m| (ngram_diff(&m.original, &m.mapped, ngram_n), m))
        .collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.id.cmp(&b.1.id)));
    scored.into_iter().take(n).map(|(_, m)| m.clone()).collect()
}
