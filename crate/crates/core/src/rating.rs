//! Human rating protocol: item selection, dimension-sequential serving,
//! golden-pair screening and the agreement/means report.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{detokenize, select_most_changed, MappedPair};
use crate::metrics::{cohen_kappa, pearson};

pub const DEFAULT_GOLDEN_THRESHOLD: u32 = 10;
pub const GOLDEN_TARGET: &str = "golden";

#[derive(Debug, Error, PartialEq)]
pub enum RatingError {
    #[error("rater id must not be empty")]
    EmptyRater,
    #[error("unknown rating unit {0:?}")]
    UnknownUnit(String),
    #[error("{dimension} score {score} outside 0..={max}")]
    OutOfRange {
        dimension: RatingDimension,
        score: i64,
        max: u32,
    },
    #[error("rater {rater:?} already scored {unit:?} on {dimension}")]
    Duplicate {
        rater: String,
        unit: String,
        dimension: RatingDimension,
    },
    #[error("unknown rating dimension {0:?}")]
    UnknownDimension(String),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatingDimension {
    Valence,
    Arousal,
    Dominance,
    Syntax,
    Appropriateness,
}

impl RatingDimension {
    /// Serving order.
    pub const ORDER: [RatingDimension; 5] = [
        RatingDimension::Valence,
        RatingDimension::Arousal,
        RatingDimension::Dominance,
        RatingDimension::Syntax,
        RatingDimension::Appropriateness,
    ];

    pub fn max_score(self) -> u32 {
        match self {
            RatingDimension::Valence | RatingDimension::Arousal | RatingDimension::Dominance => 100,
            RatingDimension::Syntax | RatingDimension::Appropriateness => 2,
        }
    }

    pub fn is_continuous(self) -> bool {
        self.max_score() == 100
    }

    pub fn name(self) -> &'static str {
        match self {
            RatingDimension::Valence => "valence",
            RatingDimension::Arousal => "arousal",
            RatingDimension::Dominance => "dominance",
            RatingDimension::Syntax => "syntax",
            RatingDimension::Appropriateness => "appropriateness",
        }
    }
}

impl fmt::Display for RatingDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RatingDimension {
    type Err = RatingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ORDER
            .into_iter()
            .find(|d| d.name() == s.to_ascii_lowercase())
            .ok_or_else(|| RatingError::UnknownDimension(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemUtterance {
    /// `original`/`mapped` for corpus items, `positive`/`negative` for golden ones.
    pub role: String,
    pub text: String,
}

/// A pair of utterances shown to raters; each utterance is rated separately
/// under the unit id `item:role`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingItem {
    pub id: String,
    pub target: String,
    pub golden: bool,
    #[serde(default)]
    pub preceding: Option<String>,
    pub utterances: Vec<ItemUtterance>,
}

impl RatingItem {
    pub fn unit_id(&self, role: &str) -> String {
        format!("{}:{}", self.id, role)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldenPair {
    pub id: String,
    pub positive: String,
    pub negative: String,
}

/// Reads `id<TAB>positive<TAB>negative` lines.
pub fn load_golden_tsv<R: BufRead>(reader: R) -> Result<Vec<GoldenPair>, RatingError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| RatingError::Malformed {
            line: i + 1,
            reason: e.to_string(),
        })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(RatingError::Malformed {
                line: i + 1,
                reason: format!("expected 3 tab-separated fields, found {}", f.len()),
            });
        }
        out.push(GoldenPair {
            id: f[0].trim().to_string(),
            positive: f[1].trim().to_string(),
            negative: f[2].trim().to_string(),
        });
    }
    Ok(out)
}

/// Selected items plus the positions golden items were placed at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingSet {
    pub seed: u64,
    pub items: Vec<RatingItem>,
    pub golden_positions: Vec<usize>,
}

impl RatingSet {
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for item in &self.items {
            serde_json::to_writer(&mut out, item)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub fn load_items_jsonl<R: BufRead>(reader: R) -> Result<Vec<RatingItem>, RatingError> {
    let mut items = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let bad = |reason: String| RatingError::Malformed { line: i + 1, reason };
        let line = line.map_err(|e| bad(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        items.push(serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?);
    }
    Ok(items)
}

/// Takes the `n` most-changed pairs of every target, shuffles them together
/// with `seed`, then inserts each golden pair at a seeded position.
/// `sources` maps pair ids to the preceding utterance.
pub fn build_rating_set(
    mapped_by_target: &BTreeMap<String, Vec<MappedPair>>,
    sources: &HashMap<String, String>,
    golden: &[GoldenPair],
    n: usize,
    ngram_n: usize,
    seed: u64,
) -> RatingSet {
    let mut items = Vec::new();
    for (target, mapped) in mapped_by_target {
        for m in select_most_changed(mapped, n, ngram_n) {
            items.push(RatingItem {
                id: format!("{target}/{}", m.id),
                target: target.clone(),
                golden: false,
                preceding: sources.get(&m.id).cloned(),
                utterances: vec![
                    ItemUtterance {
                        role: "original".into(),
                        text: detokenize(&m.original),
                    },
                    ItemUtterance {
                        role: "mapped".into(),
                        text: detokenize(&m.mapped),
                    },
                ],
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    items.shuffle(&mut rng);
    let mut golden_positions = Vec::new();
    for g in golden {
        let pos = rng.random_range(0..=items.len());
        for p in golden_positions.iter_mut() {
            if *p >= pos {
                *p += 1;
            }
        }
        golden_positions.push(pos);
        items.insert(
            pos,
            RatingItem {
                id: format!("{GOLDEN_TARGET}/{}", g.id),
                target: GOLDEN_TARGET.into(),
                golden: true,
                preceding: None,
                utterances: vec![
                    ItemUtterance {
                        role: "positive".into(),
                        text: g.positive.clone(),
                    },
                    ItemUtterance {
                        role: "negative".into(),
                        text: g.negative.clone(),
                    },
                ],
            },
        );
    }
    RatingSet {
        seed,
        items,
        golden_positions,
    }
}

/// What a rater is asked to score next.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingPrompt {
    pub unit_id: String,
    pub dimension: RatingDimension,
    pub text: String,
    pub preceding: Option<String>,
    pub golden: bool,
    pub remaining: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingSubmission {
    pub rater_id: String,
    pub unit_id: String,
    pub dimension: RatingDimension,
    pub score: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub rater_id: String,
    pub unit_id: String,
    pub dimension: RatingDimension,
    pub score: u32,
    pub is_golden: bool,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
}

#[derive(Debug, Clone)]
struct Unit {
    item: usize,
    role: String,
    text: String,
}

/// The loaded item set plus every accepted record.
#[derive(Debug, Clone)]
pub struct RatingBook {
    items: Vec<RatingItem>,
    units: Vec<Unit>,
    unit_index: HashMap<String, usize>,
    records: Vec<RatingRecord>,
    seen: HashSet<(String, String, RatingDimension)>,
}

impl RatingBook {
    pub fn new(items: Vec<RatingItem>) -> Self {
        let mut units = Vec::new();
        let mut unit_index = HashMap::new();
        for (i, item) in items.iter().enumerate() {
            for u in &item.utterances {
                unit_index.insert(item.unit_id(&u.role), units.len());
                units.push(Unit {
                    item: i,
                    role: u.role.clone(),
                    text: u.text.clone(),
                });
            }
        }
        RatingBook {
            items,
            units,
            unit_index,
            records: Vec::new(),
            seen: HashSet::new(),
        }
    }

    pub fn items(&self) -> &[RatingItem] {
        &self.items
    }

    pub fn records(&self) -> &[RatingRecord] {
        &self.records
    }

    pub fn unit_count(&self) -> usize {
        self.units.len()
    }

    /// First unanswered (dimension, unit) in serving order; `None` once the
    /// rater has finished.
    pub fn next_prompt(&self, rater: &str) -> Result<Option<RatingPrompt>, RatingError> {
        if rater.trim().is_empty() {
            return Err(RatingError::EmptyRater);
        }
        let total = self.units.len() * RatingDimension::ORDER.len();
        let done = self.records.iter().filter(|r| r.rater_id == rater).count();
        for dim in RatingDimension::ORDER {
            for unit in &self.units {
                let item = &self.items[unit.item];
                let id = item.unit_id(&unit.role);
                if self.seen.contains(&(rater.to_string(), id.clone(), dim)) {
                    continue;
                }
                return Ok(Some(RatingPrompt {
                    unit_id: id,
                    dimension: dim,
                    text: unit.text.clone(),
                    preceding: if dim == RatingDimension::Appropriateness {
                        item.preceding.clone()
                    } else {
                        None
                    },
                    golden: item.golden,
                    remaining: total - done,
                }));
            }
        }
        Ok(None)
    }

    /// Validates a submission and turns it into a record without storing it.
    pub fn check(&self, sub: &RatingSubmission, timestamp: u64) -> Result<RatingRecord, RatingError> {
        if sub.rater_id.trim().is_empty() {
            return Err(RatingError::EmptyRater);
        }
        let unit = *self
            .unit_index
            .get(&sub.unit_id)
            .ok_or_else(|| RatingError::UnknownUnit(sub.unit_id.clone()))?;
        let max = sub.dimension.max_score();
        if sub.score < 0 || sub.score > max as i64 {
            return Err(RatingError::OutOfRange {
                dimension: sub.dimension,
                score: sub.score,
                max,
            });
        }
        let key = (sub.rater_id.clone(), sub.unit_id.clone(), sub.dimension);
        if self.seen.contains(&key) {
            return Err(RatingError::Duplicate {
                rater: sub.rater_id.clone(),
                unit: sub.unit_id.clone(),
                dimension: sub.dimension,
            });
        }
        Ok(RatingRecord {
            rater_id: sub.rater_id.clone(),
            unit_id: sub.unit_id.clone(),
            dimension: sub.dimension,
            score: sub.score as u32,
            is_golden: self.items[self.units[unit].item].golden,
            timestamp,
        })
    }

    /// Stores a record (from [`check`](Self::check) or a replayed log).
    pub fn insert(&mut self, record: RatingRecord) -> Result<(), RatingError> {
        let sub = RatingSubmission {
            rater_id: record.rater_id.clone(),
            unit_id: record.unit_id.clone(),
            dimension: record.dimension,
            score: record.score as i64,
        };
        self.check(&sub, record.timestamp)?;
        self.seen
            .insert((record.rater_id.clone(), record.unit_id.clone(), record.dimension));
        self.records.push(record);
        Ok(())
    }

    pub fn submit(&mut self, sub: &RatingSubmission, timestamp: u64) -> Result<RatingRecord, RatingError> {
        let rec = self.check(sub, timestamp)?;
        self.insert(rec.clone())?;
        Ok(rec)
    }

    fn unit_of(&self, unit_id: &str) -> Option<(&RatingItem, &str)> {
        self.unit_index
            .get(unit_id)
            .map(|&u| (&self.items[self.units[u].item], self.units[u].role.as_str()))
    }

    /// Raters whose valence scores for the two sides of any golden pair are
    /// within `threshold` points of each other.
    pub fn flagged_raters(&self, threshold: u32) -> Vec<String> {
        let mut golden: BTreeMap<(&str, &str), [Option<u32>; 2]> = BTreeMap::new();
        for r in &self.records {
            if r.dimension != RatingDimension::Valence {
                continue;
            }
            let Some((item, role)) = self.unit_of(&r.unit_id) else {
                continue;
            };
            if !item.golden {
                continue;
            }
            let slot = golden.entry((r.rater_id.as_str(), item.id.as_str())).or_default();
            match role {
                "positive" => slot[0] = Some(r.score),
                "negative" => slot[1] = Some(r.score),
                _ => {}
            }
        }
        let flagged: BTreeSet<String> = golden
            .into_iter()
            .filter_map(|((rater, _), s)| match s {
                [Some(p), Some(n)] if p.abs_diff(n) <= threshold => Some(rater.to_string()),
                _ => None,
            })
            .collect();
        flagged.into_iter().collect()
    }

    pub fn report(&self, threshold: u32) -> RatingReport {
        let flagged = self.flagged_raters(threshold);
        let excluded: HashSet<&str> = flagged.iter().map(String::as_str).collect();
        let kept: Vec<&RatingRecord> = self
            .records
            .iter()
            .filter(|r| !r.is_golden && !excluded.contains(r.rater_id.as_str()))
            .collect();

        let agreement = RatingDimension::ORDER
            .iter()
            .map(|&d| agreement_for(d, &kept))
            .collect();

        let mut sums: BTreeMap<(String, RatingDimension), [(f64, usize); 2]> = BTreeMap::new();
        for r in &kept {
            let Some((item, role)) = self.unit_of(&r.unit_id) else {
                continue;
            };
            let side = match role {
                "original" => 0,
                "mapped" => 1,
                _ => continue,
            };
            let slot = &mut sums.entry((item.target.clone(), r.dimension)).or_default()[side];
            slot.0 += r.score as f64;
            slot.1 += 1;
        }
        let mean = |(s, n): (f64, usize)| (n > 0).then(|| s / n as f64);
        let means = sums
            .into_iter()
            .map(|((target, dimension), [o, m])| TargetMeans {
                target,
                dimension,
                original_mean: mean(o),
                mapped_mean: mean(m),
                original_count: o.1,
                mapped_count: m.1,
            })
            .collect();

        RatingReport {
            records: self.records.clone(),
            agreement,
            means,
            flagged_raters: flagged,
            golden_threshold: threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub dimension: RatingDimension,
    /// `pearson` or `cohen_kappa`.
    pub statistic: String,
    pub value: Option<f64>,
    pub computable: bool,
    pub paired_ratings: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetMeans {
    pub target: String,
    pub dimension: RatingDimension,
    pub original_mean: Option<f64>,
    pub mapped_mean: Option<f64>,
    pub original_count: usize,
    pub mapped_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingReport {
    pub records: Vec<RatingRecord>,
    pub agreement: Vec<Agreement>,
    pub means: Vec<TargetMeans>,
    pub flagged_raters: Vec<String>,
    pub golden_threshold: u32,
}

/// Pools every rater pair's scores on units both of them rated.
fn agreement_for(dim: RatingDimension, records: &[&RatingRecord]) -> Agreement {
    let mut by_unit: BTreeMap<&str, BTreeMap<&str, u32>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.dimension == dim) {
        by_unit
            .entry(r.unit_id.as_str())
            .or_default()
            .insert(r.rater_id.as_str(), r.score);
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for raters in by_unit.values() {
        let scores: Vec<u32> = raters.values().copied().collect();
        for i in 0..scores.len() {
            for j in i + 1..scores.len() {
                xs.push(scores[i]);
                ys.push(scores[j]);
            }
        }
    }
    let paired = xs.len();
    let (statistic, result) = if dim.is_continuous() {
        let fx: Vec<f64> = xs.iter().map(|&v| v as f64).collect();
        let fy: Vec<f64> = ys.iter().map(|&v| v as f64).collect();
        ("pearson", pearson(&fx, &fy).map(|r| (r, None)))
    } else {
        (
            "cohen_kappa",
            cohen_kappa(&xs, &ys).map(|k| {
                let note = k.degenerate.then(|| "degenerate marginals".to_string());
                (k.kappa, note)
            }),
        )
    };
    let (value, note) = match result {
        Ok((v, note)) => (Some(v), note),
        Err(e) if paired == 0 => (None, Some(format!("no doubly-rated units ({e})"))),
        Err(e) => (None, Some(e.to_string())),
    };
    Agreement {
        dimension: dim,
        statistic: statistic.into(),
        computable: value.is_some(),
        value,
        paired_ratings: paired,
        note,
    }
}
