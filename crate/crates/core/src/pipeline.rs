//! End-to-end operations shared by the CLI and the service.

use std::collections::BTreeMap;
use std::num::NonZeroUsize;
use std::thread;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{detokenize, tokenize, DialogPair, MappedPair};
use crate::decoder::{DecodeError, DecodeMode, Decoder, DecoderConfig, StepTrace};
use crate::langmodel::{LanguageModel, NGramModel, SEP};
use crate::lemmatizer::LemmaRules;
use crate::lexicon::AffectiveLexicon;
use crate::metrics::{bleu, mean_valence, ngram_diff, perplexity, MetricError, SentimentLexicon};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("pair {id}: {source}")]
    Pair { id: String, source: DecodeError },
}

/// Generator training sequences: `source <sep> response` per pair.
pub fn dialog_sequences(pairs: &[DialogPair]) -> Vec<Vec<String>> {
    pairs
        .iter()
        .map(|p| {
            let mut seq = p.source.clone();
            seq.push(SEP.to_string());
            seq.extend(p.response.iter().cloned());
            seq
        })
        .collect()
}

/// Reference-model training sequences: every non-empty utterance on its own.
pub fn utterance_sequences(pairs: &[DialogPair]) -> Vec<Vec<String>> {
    pairs
        .iter()
        .flat_map(|p| [p.source.clone(), p.response.clone()])
        .filter(|u| !u.is_empty())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    pub tokens: Vec<String>,
    pub text: String,
    pub traces: Vec<StepTrace>,
}

/// A loaded model, lexicon and lemmatizer.
pub struct Engine {
    pub model: NGramModel,
    pub lexicon: AffectiveLexicon,
    pub rules: LemmaRules,
}

impl Engine {
    pub fn new(model: NGramModel, lexicon: AffectiveLexicon, rules: LemmaRules) -> Self {
        Engine { model, lexicon, rules }
    }

    pub fn decoder(&self) -> Decoder<'_, NGramModel> {
        Decoder::new(&self.model, &self.lexicon, &self.rules)
    }

    pub fn generate(&self, source_text: &str, config: &DecoderConfig) -> Result<Generation, DecodeError> {
        let source = tokenize(source_text);
        let (tokens, traces) = self.decoder().generate_response(&source, config)?;
        Ok(Generation {
            text: detokenize(&tokens),
            tokens,
            traces,
        })
    }

    /// Teacher-forced rewrite of every response. Work is spread over
    /// `workers` threads; output order follows input order.
    pub fn map_corpus(
        &self,
        pairs: &[DialogPair],
        config: &DecoderConfig,
        keep_traces: bool,
        workers: usize,
    ) -> Result<Vec<MappedPair>, PipelineError> {
        let mut config = *config;
        config.mode = DecodeMode::TeacherForced;
        config.validate()?;
        let label = config.target.label();
        let decoder = self.decoder();
        let map_one = |p: &DialogPair| -> Result<MappedPair, PipelineError> {
            let (mapped, traces) = decoder
                .map_utterance(&p.source, &p.response, &config)
                .map_err(|source| PipelineError::Pair {
                    id: p.id.clone(),
                    source,
                })?;
            Ok(MappedPair {
                id: p.id.clone(),
                target: label.clone(),
                original: p.response.clone(),
                mapped,
                traces: if keep_traces { traces } else { Vec::new() },
            })
        };
        let workers = workers.clamp(1, pairs.len().max(1));
        if workers == 1 {
            return pairs.iter().map(map_one).collect();
        }
        let chunk = pairs.len().div_ceil(workers);
        thread::scope(|scope| {
            let handles: Vec<_> = pairs
                .chunks(chunk)
                .map(|part| scope.spawn(|| part.iter().map(map_one).collect::<Result<Vec<_>, _>>()))
                .collect();
            let mut out = Vec::with_capacity(pairs.len());
            for h in handles {
                out.extend(h.join().expect("mapping worker panicked")?);
            }
            Ok(out)
        })
    }
}

pub fn default_workers() -> usize {
    thread::available_parallelism().map(NonZeroUsize::get).unwrap_or(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSummary {
    pub utterances: usize,
    pub changed_utterances: usize,
    pub substituted_tokens: usize,
    pub mean_ngram_diff: f64,
}

pub fn summarize(mapped: &[MappedPair], ngram_n: usize) -> MapSummary {
    let changed = mapped.iter().filter(|m| m.changed()).count();
    let substituted = mapped
        .iter()
        .map(|m| m.original.iter().zip(&m.mapped).filter(|(a, b)| a != b).count())
        .sum();
    let diff: usize = mapped.iter().map(|m| ngram_diff(&m.original, &m.mapped, ngram_n)).sum();
    MapSummary {
        utterances: mapped.len(),
        changed_utterances: changed,
        substituted_tokens: substituted,
        mean_ngram_diff: if mapped.is_empty() {
            0.0
        } else {
            diff as f64 / mapped.len() as f64
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetReport {
    pub target: String,
    pub utterance_count: usize,
    pub mean_compound: f64,
    pub perplexity: f64,
    pub bleu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Metrics of the unmodified responses.
    pub original: TargetReport,
    pub targets: Vec<TargetReport>,
}

fn report_row<M: LanguageModel + ?Sized>(
    target: &str,
    mapped: &[Vec<String>],
    original: &[Vec<String>],
    reference: &M,
    sentiment: &SentimentLexicon,
) -> Result<TargetReport, MetricError> {
    let scored: Vec<Vec<String>> = mapped.iter().filter(|u| !u.is_empty()).cloned().collect();
    Ok(TargetReport {
        target: target.to_string(),
        utterance_count: mapped.len(),
        mean_compound: mean_valence(mapped, sentiment)?,
        perplexity: perplexity(reference, &scored)?,
        bleu: bleu(mapped, original, 4)?.score,
    })
}

/// Mean compound valence, reference perplexity and BLEU against the
/// original responses, for the originals and every mapped target.
pub fn evaluate<M: LanguageModel + ?Sized>(
    mapped_by_target: &BTreeMap<String, Vec<MappedPair>>,
    reference: &M,
    sentiment: &SentimentLexicon,
) -> Result<EvalReport, MetricError> {
    let first = mapped_by_target.values().next().ok_or(MetricError::Empty("evaluate"))?;
    let original: Vec<Vec<String>> = first.iter().map(|m| m.original.clone()).collect();
    let original_row = report_row("original", &original, &original, reference, sentiment)?;
    let mut targets = Vec::new();
    for (target, rows) in mapped_by_target {
        let mapped: Vec<Vec<String>> = rows.iter().map(|m| m.mapped.clone()).collect();
        let refs: Vec<Vec<String>> = rows.iter().map(|m| m.original.clone()).collect();
        targets.push(report_row(target, &mapped, &refs, reference, sentiment)?);
    }
    Ok(EvalReport {
        original: original_row,
        targets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::{AffectTarget, Preset};
    use crate::langmodel::TrainConfig;
    use crate::lexicon::VadPoint;

    fn pairs() -> Vec<DialogPair> {
        [
            ("a", "how was the day ?", "it was a good day ."),
            ("b", "how do you feel ?", "i feel bad today ."),
            ("c", "what happened ?", "the party was terrible ."),
            ("d", "how was the party ?", "it was a great party !"),
            ("e", "are you ok ?", "i feel happy ."),
            ("f", "what is that ?", "a gift for you ."),
        ]
        .iter()
        .map(|(i, s, r)| DialogPair::new(i, s, r))
        .collect()
    }

    fn engine() -> Engine {
        let model = NGramModel::train(&dialog_sequences(&pairs()), TrainConfig::with_order(3, 0.01)).unwrap();
        let lexicon = AffectiveLexicon::from_entries(
            "test",
            [
                ("good", [0.9, 0.5, 0.7]),
                ("bad", [0.1, 0.6, 0.3]),
                ("great", [0.95, 0.7, 0.8]),
                ("terrible", [0.05, 0.8, 0.3]),
                ("happy", [1.0, 0.7, 0.7]),
                ("day", [0.6, 0.3, 0.5]),
                ("party", [0.85, 0.9, 0.6]),
            ]
            .map(|(t, [v, a, d])| (t, VadPoint::new(v, a, d).unwrap())),
        );
        Engine::new(model, lexicon, LemmaRules::default())
    }

    fn config(lambda: f64) -> DecoderConfig {
        DecoderConfig::new(lambda, 30, AffectTarget::preset(Preset::Hhh), DecodeMode::TeacherForced)
    }

    #[test]
    fn sequences() {
        let d = dialog_sequences(&pairs());
        assert_eq!(d[0].join(" "), "how was the day ? <sep> it was a good day .");
        assert_eq!(utterance_sequences(&pairs()).len(), 12);
    }

    #[test]
    fn lambda_zero_mapping_keeps_a_well_fit_corpus() {
        let e = engine();
        let mapped = e.map_corpus(&pairs(), &config(0.0), false, 1).unwrap();
        let s = summarize(&mapped, 2);
        assert_eq!(s.utterances, 6);
        assert!(mapped.iter().all(|m| m.original.len() == m.mapped.len()));
        assert!(mapped.iter().all(|m| m.target == "HHH"));
        assert!(s.changed_utterances <= 6);
    }

    #[test]
    fn parallel_mapping_matches_serial() {
        let e = engine();
        let serial = e.map_corpus(&pairs(), &config(0.8), true, 1).unwrap();
        let parallel = e.map_corpus(&pairs(), &config(0.8), true, 4).unwrap();
        assert_eq!(serial, parallel);
        assert!(serial.iter().all(|m| m.traces.len() == m.original.len()));
    }

    #[test]
    fn strong_lambda_pulls_toward_positive_words() {
        let e = engine();
        let mapped = e.map_corpus(&pairs(), &config(1.0), false, 2).unwrap();
        let b = mapped.iter().find(|m| m.id == "b").unwrap();
        assert_ne!(b.mapped[2], "bad");
        // "i", "feel", "." are not in the lexicon and pass through
        assert_eq!(b.mapped[0], "i");
        assert_eq!(b.mapped[4], ".");
    }

    #[test]
    fn empty_lexicon_changes_nothing() {
        let mut e = engine();
        e.lexicon = AffectiveLexicon::from_entries("empty", Vec::<(&str, VadPoint)>::new());
        let mapped = e.map_corpus(&pairs(), &config(1.0), false, 3).unwrap();
        assert_eq!(summarize(&mapped, 1).changed_utterances, 0);
    }

    #[test]
    fn evaluation_of_identity_mapping() {
        let e = engine();
        let mapped = e.map_corpus(&pairs(), &config(0.0), false, 1).unwrap();
        let identity: Vec<MappedPair> = mapped
            .iter()
            .map(|m| MappedPair {
                mapped: m.original.clone(),
                ..m.clone()
            })
            .collect();
        let by_target = BTreeMap::from([("HHH".to_string(), identity)]);
        let sentiment = SentimentLexicon::from_affective(&e.lexicon, LemmaRules::default());
        let report = evaluate(&by_target, &e.model, &sentiment).unwrap();
        assert_eq!(report.targets.len(), 1);
        assert_eq!(report.targets[0].bleu, 1.0);
        assert_eq!(
            report.targets[0],
            TargetReport {
                target: "HHH".into(),
                ..report.original.clone()
            }
        );
        assert!(evaluate(&BTreeMap::new(), &e.model, &sentiment).is_err());
    }

    #[test]
    fn generate_detokenizes() {
        let e = engine();
        let cfg = DecoderConfig::new(0.0, 20, AffectTarget::preset(Preset::Hhh), DecodeMode::FreeRunning);
        let g = e.generate("How was the party?", &cfg).unwrap();
        assert_eq!(g.text, detokenize(&g.tokens));
        assert!(!g.tokens.iter().any(|t| t == "<eos>"));
        assert!(e.generate("hi", &DecoderConfig { lambda: 2.0, ..cfg }).is_err());
    }
}
