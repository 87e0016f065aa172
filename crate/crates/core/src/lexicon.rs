//! Affective lexicon: lemma to (valence, arousal, dominance) in the unit cube.
//!
//! The on-disk format is the tab-separated `term<TAB>V<TAB>A<TAB>D` layout of
//! the NRC-VAD distribution. A header line is recognised by a non-numeric
//! second field. Multi-word terms are skipped, duplicates keep the last value.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest possible distance between two points of the unit cube.
pub const MAX_VAD_DISTANCE: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("malformed lexicon line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("{dimension} out of range at line {line}: term {term:?} has value {value}")]
    OutOfRange {
        line: usize,
        term: String,
        dimension: Dimension,
        value: f64,
    },
    #[error("{dimension} must be finite and within [0, 1], got {value}")]
    InvalidCoordinate { dimension: Dimension, value: f64 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Valence,
    Arousal,
    Dominance,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dimension::Valence => "valence",
            Dimension::Arousal => "arousal",
            Dimension::Dominance => "dominance",
        })
    }
}

/// A point in the valence-arousal-dominance cube. Every coordinate is finite
/// and lies in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawVad", into = "RawVad")]
pub struct VadPoint {
    valence: f64,
    arousal: f64,
    dominance: f64,
}

#[derive(Serialize, Deserialize)]
struct RawVad {
    valence: f64,
    arousal: f64,
    dominance: f64,
}

impl TryFrom<RawVad> for VadPoint {
    type Error = LexiconError;
    fn try_from(raw: RawVad) -> Result<Self, Self::Error> {
        VadPoint::new(raw.valence, raw.arousal, raw.dominance)
    }
}

impl From<VadPoint> for RawVad {
    fn from(p: VadPoint) -> Self {
        RawVad {
            valence: p.valence,
            arousal: p.arousal,
            dominance: p.dominance,
        }
    }
}

fn check_unit(dimension: Dimension, value: f64) -> Result<f64, LexiconError> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(LexiconError::InvalidCoordinate { dimension, value })
    }
}

impl VadPoint {
    pub fn new(valence: f64, arousal: f64, dominance: f64) -> Result<Self, LexiconError> {
        Ok(VadPoint {
            valence: check_unit(Dimension::Valence, valence)?,
            arousal: check_unit(Dimension::Arousal, arousal)?,
            dominance: check_unit(Dimension::Dominance, dominance)?,
        })
    }

    pub fn valence(&self) -> f64 {
        self.valence
    }

    pub fn arousal(&self) -> f64 {
        self.arousal
    }

    pub fn dominance(&self) -> f64 {
        self.dominance
    }

    pub fn coords(&self) -> [f64; 3] {
        [self.valence, self.arousal, self.dominance]
    }

    /// Euclidean distance in VAD space.
    pub fn distance(&self, other: &VadPoint) -> f64 {
        vad_distance(self, other)
    }
}

pub fn vad_distance(a: &VadPoint, b: &VadPoint) -> f64 {
    let dv = a.valence - b.valence;
    let da = a.arousal - b.arousal;
    let dd = a.dominance - b.dominance;
    (dv * dv + da * da + dd * dd).sqrt()
}

/// Immutable lemma -> VAD map.
#[derive(Debug, Clone, Default)]
pub struct AffectiveLexicon {
    entries: HashMap<String, VadPoint>,
    source_name: String,
    duplicate_count: usize,
    skipped_multiword: usize,
}

impl AffectiveLexicon {
    pub fn from_entries<I, S>(source_name: &str, entries: I) -> Self
    where
        I: IntoIterator<Item = (S, VadPoint)>,
        S: AsRef<str>,
    {
        let mut lexicon = AffectiveLexicon {
            source_name: source_name.to_string(),
            ..Default::default()
        };
        for (term, point) in entries {
            lexicon.insert(term.as_ref(), point);
        }
        lexicon
    }

    fn insert(&mut self, term: &str, point: VadPoint) {
        let key = term.trim().to_lowercase();
        if key.is_empty() {
            return;
        }
        if key.split_whitespace().nth(1).is_some() {
            self.skipped_multiword += 1;
            return;
        }
        if self.entries.insert(key, point).is_some() {
            self.duplicate_count += 1;
        }
    }

    /// Parses a lexicon from a line-oriented TSV stream.
    pub fn load<R: BufRead>(source_name: &str, reader: R) -> Result<Self, LexiconError> {
        let mut lexicon = AffectiveLexicon {
            source_name: source_name.to_string(),
            ..Default::default()
        };
        let mut seen_data = false;
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(LexiconError::Malformed {
                    line: line_no,
                    reason: format!("expected 4 tab-separated fields, found {}", fields.len()),
                });
            }
            if !seen_data && fields[1].trim().parse::<f64>().is_err() {
                // header
                seen_data = true;
                continue;
            }
            seen_data = true;
            let term = fields[0];
            let mut coords = [0.0; 3];
            let dims = [Dimension::Valence, Dimension::Arousal, Dimension::Dominance];
            for (slot, (raw, dim)) in coords.iter_mut().zip(fields[1..].iter().zip(dims)) {
                let value: f64 = raw.trim().parse().map_err(|_| LexiconError::Malformed {
                    line: line_no,
                    reason: format!("unparsable {dim} value {raw:?}"),
                })?;
                if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                    return Err(LexiconError::OutOfRange {
                        line: line_no,
                        term: term.to_string(),
                        dimension: dim,
                        value,
                    });
                }
                *slot = value;
            }
            let point = VadPoint {
                valence: coords[0],
                arousal: coords[1],
                dominance: coords[2],
            };
            lexicon.insert(term, point);
        }
        Ok(lexicon)
    }

    /// Writes entries back out in TSV form, sorted by term, without a header.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut terms: Vec<_> = self.entries.iter().collect();
        terms.sort_by(|a, b| a.0.cmp(b.0));
        for (term, p) in terms {
            writeln!(out, "{term}\t{}\t{}\t{}", p.valence, p.arousal, p.dominance)?;
        }
        Ok(())
    }

    pub fn lookup(&self, lemma: &str) -> Option<VadPoint> {
        if let Some(p) = self.entries.get(lemma) {
            return Some(*p);
        }
        self.entries.get(&lemma.to_lowercase()).copied()
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.lookup(lemma).is_some()
    }

    /// The `n` lemmas closest to `target`, ascending by distance, ties by lemma.
    pub fn nearest_lemmas(&self, target: &VadPoint, n: usize) -> Vec<(String, f64)> {
        let mut all: Vec<(String, f64)> = self
            .entries
            .iter()
            .map(|(k, p)| (k.clone(), vad_distance(p, target)))
            .collect();
        all.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        all.truncate(n);
        all
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn source_name(&self) -> &str {
        &self.source_name
    }

    /// Number of terms that overwrote an earlier entry during loading.
    pub fn duplicate_count(&self) -> usize {
        self.duplicate_count
    }

    pub fn skipped_multiword(&self) -> usize {
        self.skipped_multiword
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &VadPoint)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }
}
