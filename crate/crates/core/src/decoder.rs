//! Affect-steered decoding.
//!
//! At every step the anchor token (the LM argmax when generating, the corpus
//! token when mapping) is lemmatized and looked up in the affective lexicon.
//! Tokens without an entry pass through untouched. Otherwise the top-k
//! candidates are rescored with
//!
//! ```text
//! pi_f = (1 - lambda) * pi_t + lambda * softmax(-d)
//! ```
//!
//! where `pi_t` is the renormalized LM probability of each candidate and `d`
//! its VAD distance to the target. The candidate maximizing `pi_f` is emitted
//! and fed back as context.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::langmodel::{
    encode_dialog_context, LanguageModel, LmError, TokenDistribution, TokenId, Vocabulary, BOS, EOS, EOS_ID, SEP, UNK,
};
use crate::lemmatizer::LemmaRules;
use crate::lexicon::{AffectiveLexicon, VadPoint, MAX_VAD_DISTANCE};

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error(transparent)]
    Lm(#[from] LmError),
    #[error("invalid decoder config: {0}")]
    InvalidConfig(String),
    #[error("probability vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("{0}")]
    Anchor(&'static str),
    #[error("invalid affect target {0:?}: expected LML, LLL, MLM, HHH or three values in [0, 1]")]
    InvalidTarget(String),
}

/// Named affect targets used in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "LML")]
    Lml,
    #[serde(rename = "LLL")]
    Lll,
    #[serde(rename = "MLM")]
    Mlm,
    #[serde(rename = "HHH")]
    Hhh,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Lml, Preset::Lll, Preset::Mlm, Preset::Hhh];

    pub fn point(self) -> VadPoint {
        let (v, a, d) = match self {
            Preset::Lml => (0.0, 0.5, 0.0),
            Preset::Lll => (0.0, 0.0, 0.0),
            Preset::Mlm => (0.5, 0.0, 0.5),
            Preset::Hhh => (1.0, 1.0, 1.0),
        };
        VadPoint::new(v, a, d).expect("preset inside the unit cube")
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Lml => "LML",
            Preset::Lll => "LLL",
            Preset::Mlm => "MLM",
            Preset::Hhh => "HHH",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = DecodeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| DecodeError::InvalidTarget(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffectTarget {
    pub point: VadPoint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
}

impl AffectTarget {
    pub fn preset(preset: Preset) -> Self {
        AffectTarget {
            point: preset.point(),
            preset: Some(preset),
        }
    }

    pub fn custom(point: VadPoint) -> Self {
        AffectTarget { point, preset: None }
    }

    /// Short label: the preset name, or `v,a,d` for custom points.
    pub fn label(&self) -> String {
        match self.preset {
            Some(p) => p.name().to_string(),
            None => {
                let [v, a, d] = self.point.coords();
                format!("{v},{a},{d}")
            }
        }
    }
}

impl FromStr for AffectTarget {
    type Err = DecodeError;

    /// Accepts a preset name or three comma- or space-separated values.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Ok(p) = s.parse::<Preset>() {
            return Ok(AffectTarget::preset(p));
        }
        let invalid = || DecodeError::InvalidTarget(s.to_string());
        let values: Vec<f64> = s
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .map(|f| f.parse::<f64>().map_err(|_| invalid()))
            .collect::<Result<_, _>>()?;
        match values.as_slice() {
            [v, a, d] => VadPoint::new(*v, *a, *d)
                .map(AffectTarget::custom)
                .map_err(|_| invalid()),
            _ => Err(invalid()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    FreeRunning,
    TeacherForced,
}

/// How the top-k probabilities are renormalized before fusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Renorm {
    /// Softmax applied to the probability values themselves.
    #[default]
    #[serde(alias = "softmax")]
    SoftmaxLiteral,
    /// Divide by the sum of the selected probabilities.
    #[serde(alias = "sum")]
    SumRenormalize,
}

impl FromStr for Renorm {
    type Err = DecodeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "softmax" | "softmax_literal" => Ok(Renorm::SoftmaxLiteral),
            "sum" | "sum_renormalize" => Ok(Renorm::SumRenormalize),
            other => Err(DecodeError::InvalidConfig(format!("unknown renorm mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub lambda: f64,
    pub k: usize,
    pub target: AffectTarget,
    pub mode: DecodeMode,
    pub max_len: usize,
    #[serde(default)]
    pub renorm: Renorm,
}

pub const DEFAULT_MAX_LEN: usize = 40;

impl DecoderConfig {
    pub fn new(lambda: f64, k: usize, target: AffectTarget, mode: DecodeMode) -> Self {
        DecoderConfig {
            lambda,
            k,
            target,
            mode,
            max_len: DEFAULT_MAX_LEN,
            renorm: Renorm::default(),
        }
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        if !(self.lambda.is_finite() && (0.0..=1.0).contains(&self.lambda)) {
            return Err(DecodeError::InvalidConfig(format!(
                "lambda must be in [0, 1], got {}",
                self.lambda
            )));
        }
        if self.k < 1 {
            return Err(DecodeError::InvalidConfig("k must be at least 1".into()));
        }
        if self.max_len < 1 {
            return Err(DecodeError::InvalidConfig("max_len must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateTrace {
    pub token: String,
    pub id: TokenId,
    /// Renormalized LM probability among the candidates.
    pub lm_prob: f64,
    pub distance: f64,
    pub affect_prob: f64,
    pub fused_prob: f64,
}

/// Record of one decoding step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub step: usize,
    pub anchor: String,
    pub anchor_lemma: String,
    pub in_lexicon: bool,
    pub candidates: Vec<CandidateTrace>,
    pub chosen: String,
    /// Set when k exceeded the vocabulary and was clamped.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub k_clamped: bool,
}

/// Top-k candidates with renormalized probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidates {
    pub ids: Vec<TokenId>,
    pub probs: Vec<f64>,
    pub clamped: bool,
}

/// Numerically stable softmax.
pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn top_k_ids(dist: &TokenDistribution, k: usize, skip: impl Fn(TokenId) -> bool) -> Vec<TokenId> {
    let mut ids: Vec<TokenId> = (0..dist.len() as u32).map(TokenId).filter(|id| !skip(*id)).collect();
    ids.sort_by(|a, b| dist.prob(*b).total_cmp(&dist.prob(*a)).then(a.cmp(b)));
    ids.truncate(k);
    ids
}

fn renormalize(dist: &TokenDistribution, ids: Vec<TokenId>, k: usize, renorm: Renorm) -> Candidates {
    let raw: Vec<f64> = ids.iter().map(|id| dist.prob(*id)).collect();
    let probs = match renorm {
        Renorm::SoftmaxLiteral => softmax(&raw),
        Renorm::SumRenormalize => {
            let sum: f64 = raw.iter().sum();
            if sum > 0.0 {
                raw.iter().map(|p| p / sum).collect()
            } else {
                vec![1.0 / raw.len() as f64; raw.len()]
            }
        }
    };
    Candidates {
        clamped: k > dist.len(),
        ids,
        probs,
    }
}

/// Selects the `k` most probable tokens (ties by lowest id) and renormalizes
/// their probabilities. A `k` larger than the vocabulary is clamped.
pub fn candidate_probs(dist: &TokenDistribution, k: usize, renorm: Renorm) -> Candidates {
    let ids = top_k_ids(dist, k, |_| false);
    renormalize(dist, ids, k, renorm)
}

/// `pi_f = (1 - lambda) * pi_t + lambda * pi_d`
pub fn fuse_probabilities(pi_t: &[f64], pi_d: &[f64], lambda: f64) -> Result<Vec<f64>, DecodeError> {
    if pi_t.len() != pi_d.len() {
        return Err(DecodeError::LengthMismatch(pi_t.len(), pi_d.len()));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(DecodeError::InvalidConfig(format!("lambda {lambda} outside [0, 1]")));
    }
    Ok(pi_t
        .iter()
        .zip(pi_d)
        .map(|(t, d)| (1.0 - lambda) * t + lambda * d)
        .collect())
}

/// Lexicon plus lemmatizer: everything needed to place a token in VAD space.
#[derive(Debug, Clone, Copy)]
pub struct AffectSpace<'a> {
    pub lexicon: &'a AffectiveLexicon,
    pub rules: &'a LemmaRules,
}

fn is_structural(token: &str) -> bool {
    matches!(token, BOS | EOS | SEP | UNK)
}

impl<'a> AffectSpace<'a> {
    pub fn new(lexicon: &'a AffectiveLexicon, rules: &'a LemmaRules) -> Self {
        AffectSpace { lexicon, rules }
    }

    /// Lemma of `token` and its VAD point, if the lexicon has one. Structural
    /// tokens never have a point.
    pub fn locate(&self, token: &str) -> (String, Option<VadPoint>) {
        if is_structural(token) {
            return (token.to_string(), None);
        }
        let lemma = self.rules.lemmatize(token);
        let point = self.lexicon.lookup(&lemma);
        (lemma, point)
    }

    /// Distances of the candidates to `target` and `softmax(-d)`. Candidates
    /// absent from the lexicon sit at the maximal distance sqrt(3).
    pub fn affect_probs<S: AsRef<str>>(&self, candidates: &[S], target: &VadPoint) -> (Vec<f64>, Vec<f64>) {
        let distances: Vec<f64> = candidates
            .iter()
            .map(|c| match self.locate(c.as_ref()).1 {
                Some(p) => p.distance(target),
                None => MAX_VAD_DISTANCE,
            })
            .collect();
        let negated: Vec<f64> = distances.iter().map(|d| -d).collect();
        let pi_d = softmax(&negated);
        (distances, pi_d)
    }
}

/// Index of the largest value; ties go to the candidate with the lowest id.
fn argmax_by_id(values: &[f64], ids: &[TokenId]) -> usize {
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] > values[best] || (values[i] == values[best] && ids[i] < ids[best]) {
            best = i;
        }
    }
    best
}

/// Affect-steered decoder over any [`LanguageModel`].
pub struct Decoder<'a, M: LanguageModel + ?Sized> {
    pub model: &'a M,
    pub affect: AffectSpace<'a>,
}

impl<'a, M: LanguageModel + ?Sized> Decoder<'a, M> {
    pub fn new(model: &'a M, lexicon: &'a AffectiveLexicon, rules: &'a LemmaRules) -> Self {
        Decoder {
            model,
            affect: AffectSpace::new(lexicon, rules),
        }
    }

    fn vocab(&self) -> &Vocabulary {
        self.model.vocab()
    }

    fn token_str(&self, id: TokenId) -> String {
        self.vocab().token(id).unwrap_or(UNK).to_string()
    }

    /// One decoding step. `anchor` must be the ground-truth token in
    /// teacher-forced mode and `None` when free-running.
    pub fn select_next(
        &self,
        context: &[TokenId],
        config: &DecoderConfig,
        step: usize,
        anchor: Option<&str>,
    ) -> Result<(String, StepTrace), DecodeError> {
        let dist = self.model.next_distribution(context)?;
        let anchor = match (config.mode, anchor) {
            (DecodeMode::TeacherForced, Some(a)) => a.to_string(),
            (DecodeMode::FreeRunning, None) => self.token_str(dist.argmax()),
            (DecodeMode::TeacherForced, None) => {
                return Err(DecodeError::Anchor(
                    "teacher-forced decoding needs a ground-truth anchor",
                ))
            }
            (DecodeMode::FreeRunning, Some(_)) => {
                return Err(DecodeError::Anchor("free-running decoding takes no anchor"))
            }
        };
        let (anchor_lemma, point) = self.affect.locate(&anchor);
        let vocab = self.vocab();
        let candidates = match config.mode {
            DecodeMode::FreeRunning => candidate_probs(&dist, config.k, config.renorm),
            // A corpus rewrite substitutes words for words.
            DecodeMode::TeacherForced => {
                let ids = top_k_ids(&dist, config.k, |id| vocab.is_reserved(id));
                renormalize(&dist, ids, config.k, config.renorm)
            }
        };
        if point.is_none() || candidates.ids.is_empty() {
            let trace = StepTrace {
                step,
                chosen: anchor.clone(),
                anchor,
                anchor_lemma,
                in_lexicon: point.is_some(),
                candidates: Vec::new(),
                k_clamped: false,
            };
            return Ok((trace.chosen.clone(), trace));
        }

        let tokens: Vec<String> = candidates.ids.iter().map(|id| self.token_str(*id)).collect();
        let (distances, pi_d) = self.affect.affect_probs(&tokens, &config.target.point);
        let pi_f = fuse_probabilities(&candidates.probs, &pi_d, config.lambda)?;
        let best = argmax_by_id(&pi_f, &candidates.ids);

        let trace = StepTrace {
            step,
            anchor,
            anchor_lemma,
            in_lexicon: true,
            candidates: tokens
                .into_iter()
                .enumerate()
                .map(|(i, token)| CandidateTrace {
                    token,
                    id: candidates.ids[i],
                    lm_prob: candidates.probs[i],
                    distance: distances[i],
                    affect_prob: pi_d[i],
                    fused_prob: pi_f[i],
                })
                .collect(),
            chosen: self.token_str(candidates.ids[best]),
            k_clamped: candidates.clamped,
        };
        Ok((trace.chosen.clone(), trace))
    }

    /// Free-running generation of a response to `source`. Stops at EOS or
    /// after `max_len` steps; EOS is not included in the output.
    pub fn generate_response<S: AsRef<str>>(
        &self,
        source: &[S],
        config: &DecoderConfig,
    ) -> Result<(Vec<String>, Vec<StepTrace>), DecodeError> {
        config.validate()?;
        if config.mode != DecodeMode::FreeRunning {
            return Err(DecodeError::Anchor("generation requires free-running mode"));
        }
        let mut emitted: Vec<String> = Vec::new();
        let mut traces = Vec::new();
        for step in 0..config.max_len {
            let ctx = encode_dialog_context(self.vocab(), source, &emitted);
            let (token, trace) = self.select_next(&ctx, config, step, None)?;
            traces.push(trace);
            if token == EOS {
                break;
            }
            emitted.push(token);
        }
        Ok((emitted, traces))
    }

    /// Teacher-forced rewrite of `ground_truth` toward the target affect. The
    /// output has the same length as the input.
    pub fn map_utterance<S: AsRef<str>>(
        &self,
        source: &[S],
        ground_truth: &[S],
        config: &DecoderConfig,
    ) -> Result<(Vec<String>, Vec<StepTrace>), DecodeError> {
        config.validate()?;
        if config.mode != DecodeMode::TeacherForced {
            return Err(DecodeError::Anchor("mapping requires teacher-forced mode"));
        }
        let mut mapped: Vec<String> = Vec::with_capacity(ground_truth.len());
        let mut traces = Vec::with_capacity(ground_truth.len());
        for (step, gold) in ground_truth.iter().enumerate() {
            let ctx = encode_dialog_context(self.vocab(), source, &mapped);
            let (token, trace) = self.select_next(&ctx, config, step, Some(gold.as_ref()))?;
            mapped.push(token);
            traces.push(trace);
        }
        Ok((mapped, traces))
    }
}

/// Plain greedy decoding: argmax at every step until EOS or `max_len`.
pub fn greedy_decode<M: LanguageModel + ?Sized, S: AsRef<str>>(
    model: &M,
    source: &[S],
    max_len: usize,
) -> Result<Vec<String>, LmError> {
    let mut out: Vec<String> = Vec::new();
    for _ in 0..max_len {
        let ctx = encode_dialog_context(model.vocab(), source, &out);
        let next = model.next_distribution(&ctx)?.argmax();
        if next == EOS_ID {
            break;
        }
        out.push(model.vocab().token(next).unwrap_or(UNK).to_string());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(p: &[f64]) -> TokenDistribution {
        TokenDistribution::new(p.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn candidate_sum_renormalize() {
        let c = candidate_probs(&dist(&[0.5, 0.3, 0.2]), 2, Renorm::SumRenormalize);
        assert_eq!(c.ids, vec![TokenId(0), TokenId(1)]);
        assert!(close(&c.probs, &[0.625, 0.375], 1e-12));
        let all = candidate_probs(&dist(&[0.5, 0.3, 0.2]), 3, Renorm::SumRenormalize);
        assert!(close(&all.probs, &[0.5, 0.3, 0.2], 1e-12));
    }

    #[test]
    fn candidate_softmax_literal() {
        let c = candidate_probs(&dist(&[0.5, 0.3, 0.2]), 2, Renorm::SoftmaxLiteral);
        let e5 = 0.5f64.exp();
        let e3 = 0.3f64.exp();
        assert!(close(&c.probs, &[e5 / (e5 + e3), e3 / (e5 + e3)], 1e-12));
        assert!(close(&c.probs, &[0.5498, 0.4502], 1e-4));
    }

    #[test]
    fn candidate_ties_and_clamp() {
        let c = candidate_probs(&dist(&[0.2, 0.4, 0.4]), 2, Renorm::SumRenormalize);
        assert_eq!(c.ids, vec![TokenId(1), TokenId(2)]);
        assert!(!c.clamped);
        let c = candidate_probs(&dist(&[0.2, 0.4, 0.4]), 10, Renorm::SumRenormalize);
        assert_eq!(c.ids.len(), 3);
        assert!(c.clamped);
    }

    #[test]
    fn fusion_examples() {
        let t = [0.7, 0.3];
        let d = [0.2, 0.8];
        assert_eq!(fuse_probabilities(&t, &d, 0.0).unwrap(), t.to_vec());
        assert_eq!(fuse_probabilities(&t, &d, 1.0).unwrap(), d.to_vec());
        assert!(close(&fuse_probabilities(&t, &d, 0.5).unwrap(), &[0.45, 0.55], 1e-12));
        assert!(matches!(
            fuse_probabilities(&t, &[1.0], 0.5),
            Err(DecodeError::LengthMismatch(2, 1))
        ));
    }

    #[test]
    fn affect_probs_examples() {
        let p = |v, a, d| VadPoint::new(v, a, d).unwrap();
        let lex = AffectiveLexicon::from_entries("t", [("zero", p(0., 0., 0.)), ("far", p(1., 1., 1.))]);
        let rules = LemmaRules::default();
        let space = AffectSpace::new(&lex, &rules);
        let origin = p(0., 0., 0.);

        let (d, pi) = space.affect_probs(&["zero", "far"], &origin);
        assert!(close(&d, &[0.0, MAX_VAD_DISTANCE], 1e-12));
        let oracle = 1.0 / (1.0 + (-(3f64.sqrt())).exp());
        assert!(close(&pi, &[oracle, 1.0 - oracle], 1e-12));
        assert!((pi[0] - 0.8497).abs() < 1e-4);

        let (_, uniform) = space.affect_probs(&["nothing", "else"], &origin);
        assert!(close(&uniform, &[0.5, 0.5], 1e-15));
        let (_, single) = space.affect_probs(&["zero"], &origin);
        assert_eq!(single, vec![1.0]);
        let (d, _) = space.affect_probs(&[EOS], &origin);
        assert_eq!(d, vec![MAX_VAD_DISTANCE]);
    }

    #[test]
    fn target_parsing() {
        assert_eq!(
            "HHH".parse::<AffectTarget>().unwrap(),
            AffectTarget::preset(Preset::Hhh)
        );
        let t: AffectTarget = "0.1, 0.2, 0.3".parse().unwrap();
        assert_eq!(t.point.coords(), [0.1, 0.2, 0.3]);
        assert!(t.preset.is_none());
        assert!("XYZ".parse::<AffectTarget>().is_err());
        assert!("0.1,2,0.3".parse::<AffectTarget>().is_err());
        assert!("0.1,0.2".parse::<AffectTarget>().is_err());
    }

    #[test]
    fn presets_match_experiment_grid() {
        assert_eq!(Preset::Lml.point().coords(), [0.0, 0.5, 0.0]);
        assert_eq!(Preset::Lll.point().coords(), [0.0, 0.0, 0.0]);
        assert_eq!(Preset::Mlm.point().coords(), [0.5, 0.0, 0.5]);
        assert_eq!(Preset::Hhh.point().coords(), [1.0, 1.0, 1.0]);
    }

    #[test]
    fn config_validation() {
        let target = AffectTarget::preset(Preset::Hhh);
        let mut c = DecoderConfig::new(0.5, 30, target, DecodeMode::FreeRunning);
        assert!(c.validate().is_ok());
        c.lambda = 1.2;
        assert!(c.validate().is_err());
        c.lambda = 0.5;
        c.k = 0;
        assert!(c.validate().is_err());
        c.k = 1;
        c.max_len = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_serde_round_trip() {
        let c = DecoderConfig::new(0.3, 20, AffectTarget::preset(Preset::Lml), DecodeMode::TeacherForced);
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"LML\"") && json.contains("teacher_forced"));
        assert_eq!(serde_json::from_str::<DecoderConfig>(&json).unwrap(), c);
    }
}
