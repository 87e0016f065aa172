use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use affecton_core::api::{ChatMessage, ChatSession};
use affecton_core::decoder::StepTrace;
use affecton_core::langmodel::NGramModel;
use affecton_core::lemmatizer::LemmaRules;
use affecton_core::lexicon::AffectiveLexicon;
use affecton_core::pipeline::Engine;
use affecton_core::rating::{load_items_jsonl, RatingBook, RatingRecord, DEFAULT_GOLDEN_THRESHOLD};
use anyhow::Context;
use serde::{Deserialize, Serialize};
use tokio::sync::{Mutex, RwLock};

use crate::store::{Kind, Store};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub model: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub lemmas: Option<PathBuf>,
    pub items: Option<PathBuf>,
    pub ui_dir: Option<PathBuf>,
    pub cors_origins: Vec<String>,
    pub golden_threshold: u32,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            data_dir: data_dir.into(),
            model: None,
            lexicon: None,
            lemmas: None,
            items: None,
            ui_dir: None,
            cors_origins: Vec::new(),
            golden_threshold: DEFAULT_GOLDEN_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ChatEvent {
    Created { session_id: String, created_at: u64 },
    Message { session_id: String, message: ChatMessage },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub trace_id: String,
    pub steps: Vec<StepTrace>,
}

pub type SessionHandle = Arc<Mutex<ChatSession>>;

pub struct AppState {
    pub engine: Option<Arc<Engine>>,
    pub store: Store,
    pub ratings: Option<Mutex<RatingBook>>,
    pub sessions: RwLock<HashMap<String, SessionHandle>>,
    pub traces: RwLock<HashMap<String, Arc<Vec<StepTrace>>>>,
    pub golden_threshold: u32,
}

pub fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn open(path: &PathBuf) -> anyhow::Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

pub fn load_engine(model: &PathBuf, lexicon: &PathBuf, lemmas: Option<&PathBuf>) -> anyhow::Result<Engine> {
    let model = NGramModel::load(open(model)?).with_context(|| format!("bad model file {}", model.display()))?;
    let name = lexicon.display().to_string();
    let lexicon = AffectiveLexicon::load(&name, open(lexicon)?).with_context(|| format!("bad lexicon {name}"))?;
    let rules = match lemmas {
        Some(p) => LemmaRules::load(Some(open(p)?))?,
        None => LemmaRules::default(),
    };
    Ok(Engine::new(model, lexicon, rules))
}

impl AppState {
    /// Loads the model and rating items named in `config`, then replays the
    /// data directory.
    pub fn load(config: &ServiceConfig) -> anyhow::Result<Self> {
        let engine = match (&config.model, &config.lexicon) {
            (Some(m), Some(l)) => Some(Arc::new(load_engine(m, l, config.lemmas.as_ref())?)),
            (None, None) => None,
            _ => anyhow::bail!("--model and --lexicon must be given together"),
        };
        let items = match &config.items {
            Some(p) => Some(load_items_jsonl(open(p)?).with_context(|| format!("bad items file {}", p.display()))?),
            None => None,
        };
        AppState::from_parts(engine, items, config)
    }

    pub fn from_parts(
        engine: Option<Arc<Engine>>,
        items: Option<Vec<affecton_core::rating::RatingItem>>,
        config: &ServiceConfig,
    ) -> anyhow::Result<Self> {
        let store = Store::open(&config.data_dir)
            .with_context(|| format!("cannot create data dir {}", config.data_dir.display()))?;

        let ratings = match items {
            Some(items) => {
                let mut book = RatingBook::new(items);
                for record in store.replay::<RatingRecord>(Kind::Ratings)? {
                    if let Err(e) = book.insert(record) {
                        tracing::warn!("skipping stored rating: {e}");
                    }
                }
                Some(Mutex::new(book))
            }
            None => None,
        };

        let mut sessions: HashMap<String, ChatSession> = HashMap::new();
        for event in store.replay::<ChatEvent>(Kind::Chat)? {
            match event {
                ChatEvent::Created { session_id, created_at } => {
                    sessions.insert(
                        session_id.clone(),
                        ChatSession {
                            session_id,
                            created_at,
                            history: Vec::new(),
                        },
                    );
                }
                ChatEvent::Message { session_id, message } => match sessions.get_mut(&session_id) {
                    Some(s) => s.history.push(message),
                    None => tracing::warn!("message for unknown session {session_id}"),
                },
            }
        }
        let traces = store
            .replay::<TraceRecord>(Kind::Traces)?
            .into_iter()
            .map(|t| (t.trace_id, Arc::new(t.steps)))
            .collect();

        Ok(AppState {
            engine,
            store,
            ratings,
            sessions: RwLock::new(
                sessions
                    .into_iter()
                    .map(|(k, v)| (k, Arc::new(Mutex::new(v))))
                    .collect(),
            ),
            traces: RwLock::new(traces),
            golden_threshold: config.golden_threshold,
        })
    }
}
