//! JSON bodies exchanged between the HTTP service and its clients.

use serde::{Deserialize, Serialize};

use crate::corpus::{DialogPair, MappedPair};
use crate::decoder::{AffectTarget, DecodeError, DecodeMode, DecoderConfig, Renorm, StepTrace, DEFAULT_MAX_LEN};
use crate::lexicon::VadPoint;
use crate::pipeline::MapSummary;
use crate::rating::RatingPrompt;

/// A preset name (`"HHH"`), a `"v,a,d"` string, or a `[v, a, d]` array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSpec {
    Named(String),
    Triple([f64; 3]),
}

impl TargetSpec {
    pub fn resolve(&self) -> Result<AffectTarget, DecodeError> {
        match self {
            TargetSpec::Named(s) => s.parse(),
            TargetSpec::Triple([v, a, d]) => VadPoint::new(*v, *a, *d)
                .map(AffectTarget::custom)
                .map_err(|_| DecodeError::InvalidTarget(format!("[{v}, {a}, {d}]"))),
        }
    }
}

impl From<&AffectTarget> for TargetSpec {
    fn from(t: &AffectTarget) -> Self {
        match t.preset {
            Some(p) => TargetSpec::Named(p.name().to_string()),
            None => TargetSpec::Triple(t.point.coords()),
        }
    }
}

/// Decoding knobs shared by generate, map and chat requests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Steering {
    pub target: TargetSpec,
    pub lambda: f64,
    pub k: usize,
    #[serde(default)]
    pub renorm: Renorm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_len: Option<usize>,
}

impl Steering {
    pub fn config(&self, mode: DecodeMode) -> Result<DecoderConfig, DecodeError> {
        let mut config = DecoderConfig::new(self.lambda, self.k, self.target.resolve()?, mode);
        config.renorm = self.renorm;
        config.max_len = self.max_len.unwrap_or(DEFAULT_MAX_LEN);
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub source: String,
    #[serde(flatten)]
    pub steering: Steering,
    #[serde(default)]
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub response: String,
    pub tokens: Vec<String>,
    pub config: DecoderConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<StepTrace>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairInput {
    pub id: String,
    pub source: String,
    pub response: String,
}

impl From<&DialogPair> for PairInput {
    fn from(p: &DialogPair) -> Self {
        PairInput {
            id: p.id.clone(),
            source: p.raw_source.clone(),
            response: p.raw_response.clone(),
        }
    }
}

impl From<&PairInput> for DialogPair {
    fn from(p: &PairInput) -> Self {
        DialogPair::new(&p.id, &p.source, &p.response)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapRequest {
    pub pairs: Vec<PairInput>,
    #[serde(flatten)]
    pub steering: Steering,
    #[serde(default)]
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapResponse {
    pub mapped: Vec<MappedPair>,
    pub summary: MapSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    User,
    Agent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub speaker: Speaker,
    pub text: String,
    /// Decoder settings the reply was produced with; user turns carry the
    /// settings they requested.
    pub config: DecoderConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_id: Option<String>,
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatSession {
    pub session_id: String,
    pub created_at: u64,
    pub history: Vec<ChatMessage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub text: String,
    #[serde(flatten)]
    pub steering: Steering,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatReply {
    pub reply: String,
    pub trace_id: String,
    pub trace: Vec<StepTrace>,
    pub config: DecoderConfig,
}

/// Next rating task for a rater; `prompt` is absent once everything is scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingNext {
    pub rater_id: String,
    pub done: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<RatingPrompt>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub model_loaded: bool,
    pub rating_items: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}
