//! HTTP front end for the parley engine.
//!
//! Routes:
//! - `POST /v1/chat` takes `{"conversation_id", "text", "debug"?}` and returns a `ChatResponse`
//! - `GET /v1/conversations/{id}/history?limit=N` lists turns oldest first
//! - `GET /healthz` reports liveness and the bot name
//! - `POST /v1/admin/reload` swaps in a freshly loaded bot, or answers 409

mod config;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use parley_core::clock::SystemClock;
use parley_core::store::{load_bot_definition, FileHistoryStore};
use parley_core::{ChatRequest, Engine, EngineError, LoadErrors, StoreError};
use serde_json::json;
use thiserror::Error;

pub use crate::config::{ConfigError, ServiceConfig};

#[derive(Clone)]
pub struct AppState {
    pub engine: Arc<Engine>,
    /// Directory re-read by the reload endpoint.
    pub bot_dir: PathBuf,
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("bot failed to load:\n{0}")]
    Load(#[from] LoadErrors),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: std::net::SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Loads the bot and opens the data directory named by `config`.
pub fn build_state(config: &ServiceConfig) -> Result<AppState, ServiceError> {
    let bot = load_bot_definition(&config.bot_dir, &config.settings)?;
    let store = FileHistoryStore::open(&config.data_dir)?;
    let engine = Engine::new(bot, Arc::new(store), Arc::new(SystemClock))
        .with_defaults(config.settings.clone())
        .with_debug_default(config.debug_default);
    Ok(AppState {
        engine: Arc::new(engine),
        bot_dir: config.bot_dir.clone(),
    })
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/chat", post(chat))
        .route("/v1/conversations/{id}/history", get(history))
        .route("/healthz", get(health))
        .route("/v1/admin/reload", post(reload))
        .fallback(not_found)
        .with_state(state)
}

/// Runs the service until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let state = build_state(&config)?;
    let listener = tokio::net::TcpListener::bind(config.bind_addr)
        .await
        .map_err(|source| ServiceError::Bind {
            addr: config.bind_addr,
            source,
        })?;
    tracing::info!(addr = %listener.local_addr()?, bot = %state.engine.bot().name, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

fn engine_error(e: EngineError) -> Response {
    match e {
        EngineError::InvalidRequest(m) => error(StatusCode::BAD_REQUEST, m),
        EngineError::Store(e) => {
            tracing::error!(error = %e, "storage failure");
            error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
        }
    }
}

fn join_error(e: tokio::task::JoinError) -> Response {
    error(StatusCode::INTERNAL_SERVER_ERROR, format!("worker failed: {e}"))
}

async fn chat(State(state): State<AppState>, body: Bytes) -> Response {
    let request: ChatRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed request body: {e}")),
    };
    let engine = state.engine.clone();
    match tokio::task::spawn_blocking(move || engine.respond(&request)).await {
        Ok(Ok(response)) => Json(response).into_response(),
        Ok(Err(e)) => engine_error(e),
        Err(e) => join_error(e),
    }
}

async fn history(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(params): Query<HashMap<String, String>>,
) -> Response {
    let limit = match params.get("limit").map(|l| l.parse::<usize>()) {
        None => None,
        Some(Ok(n)) => Some(n),
        Some(Err(_)) => return error(StatusCode::BAD_REQUEST, "limit must be a non-negative integer"),
    };
    let engine = state.engine.clone();
    match tokio::task::spawn_blocking(move || engine.history(&id, limit)).await {
        Ok(Ok(records)) => Json(records).into_response(),
        Ok(Err(e)) => engine_error(e),
        Err(e) => join_error(e),
    }
}

async fn health(State(state): State<AppState>) -> Response {
    Json(json!({ "status": "ok", "bot": state.engine.bot().name })).into_response()
}

async fn reload(State(state): State<AppState>) -> Response {
    let engine = state.engine.clone();
    let dir = state.bot_dir.clone();
    match tokio::task::spawn_blocking(move || engine.reload(&dir)).await {
        Ok(Ok(bot)) => {
            tracing::info!(bot = %bot.name, "bot reloaded");
            Json(json!({ "status": "reloaded", "bot": bot.name })).into_response()
        }
        Ok(Err(errors)) => {
            tracing::warn!(%errors, "reload rejected");
            error(StatusCode::CONFLICT, errors.to_string())
        }
        Err(e) => join_error(e),
    }
}

async fn not_found() -> Response {
    error(StatusCode::NOT_FOUND, "no such route")
}
