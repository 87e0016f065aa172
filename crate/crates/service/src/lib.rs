//! HTTP/JSON front end for generation, corpus mapping, chat sessions and the
//! rating protocol. Records are persisted as append-only JSONL under a data
//! directory and replayed on startup.

pub mod routes;
pub mod state;
pub mod store;

use std::sync::Arc;

pub use routes::router;
pub use state::{AppState, ServiceConfig};

/// Loads everything named in `config` and builds the router.
pub fn build(config: &ServiceConfig) -> anyhow::Result<axum::Router> {
    let state = Arc::new(AppState::load(config)?);
    Ok(router(state, config))
}
