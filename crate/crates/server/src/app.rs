//! Routes:
//!
//! | method | path | body / query | reply |
//! |---|---|---|---|
//! | POST | `/sessions` | session config | `201` created session |
//! | GET | `/sessions` | | session ids |
//! | POST | `/sessions/{id}/chat` | `{"text": ...}` | turn summary |
//! | GET | `/sessions/{id}/state` | `radius` | observation |
//! | GET | `/sessions/{id}/log` | | session log |
//! | DELETE | `/sessions/{id}` | | end summary |
//! | GET (WebSocket) | `/sessions/{id}/events` | `from_seq` | event frames |
//! | GET | `/analytics` | `mode` | metrics report |

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;

use voxchat::analytics::{compute_metrics, load_logs, MetricsReport};
use voxchat::memory::{Mode, SessionLog};
use voxchat::session::{Event, Session, SessionConfig, SessionDeps, SessionManager};
use voxchat::world::Observation;

use crate::error::ApiError;

/// Version of every JSON shape served here.
pub const API_VERSION: u32 = 1;

const FEED_CAPACITY: usize = 256;
const DEFAULT_RADIUS: i32 = 8;

/// Every event a session has emitted, plus a channel for live subscribers.
struct Feed {
    history: Vec<Event>,
    live: broadcast::Sender<Event>,
}

struct Inner {
    manager: SessionManager,
    feeds: Mutex<HashMap<String, Feed>>,
    log_dir: Option<PathBuf>,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    pub fn new(deps: SessionDeps) -> Self {
        let log_dir = deps.store.as_ref().map(|s| s.dir().to_path_buf());
        Self {
            inner: Arc::new(Inner { manager: SessionManager::new(deps), feeds: Mutex::new(HashMap::new()), log_dir }),
        }
    }

    pub fn manager(&self) -> &SessionManager {
        &self.inner.manager
    }

    fn publish(&self, id: &str, events: &[Event]) {
        let mut feeds = self.inner.feeds.lock().expect("feed lock");
        let feed = feeds
            .entry(id.to_string())
            .or_insert_with(|| Feed { history: Vec::new(), live: broadcast::channel(FEED_CAPACITY).0 });
        for event in events {
            feed.history.push(event.clone());
            let _ = feed.live.send(event.clone());
        }
    }

    /// Events from `from_seq` on, and a receiver for everything after them.
    fn subscribe(&self, id: &str, from_seq: u64) -> (Vec<Event>, broadcast::Receiver<Event>) {
        let mut feeds = self.inner.feeds.lock().expect("feed lock");
        let feed = feeds
            .entry(id.to_string())
            .or_insert_with(|| Feed { history: Vec::new(), live: broadcast::channel(FEED_CAPACITY).0 });
        (backlog(&feed.history, from_seq), feed.live.subscribe())
    }

    fn replay(&self, id: &str, from_seq: u64) -> Vec<Event> {
        let feeds = self.inner.feeds.lock().expect("feed lock");
        feeds.get(id).map(|f| backlog(&f.history, from_seq)).unwrap_or_default()
    }

    /// Runs `f` with the session locked, then publishes whatever it emitted.
    fn with_session<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> T) -> Result<T, ApiError> {
        let session = self.inner.manager.get(id)?;
        let mut session = session.lock().expect("session lock");
        let from = session.next_seq();
        let out = f(&mut session);
        self.publish(id, session.events_from(from));
        Ok(out)
    }

    async fn blocking<T: Send + 'static>(
        &self,
        id: String,
        f: impl FnOnce(&mut Session) -> T + Send + 'static,
    ) -> Result<T, ApiError> {
        let state = self.clone();
        tokio::task::spawn_blocking(move || state.with_session(&id, f))
            .await
            .map_err(|e| ApiError::Internal(e.to_string()))?
    }
}

fn backlog(history: &[Event], from_seq: u64) -> Vec<Event> {
    let start = history.partition_point(|e| e.seq < from_seq);
    history[start..].to_vec()
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", axum::routing::delete(end_session))
        .route("/sessions/{id}/chat", post(chat))
        .route("/sessions/{id}/state", get(session_state))
        .route("/sessions/{id}/log", get(session_log))
        .route("/sessions/{id}/events", get(events))
        .route("/analytics", get(analytics))
        .with_state(state)
}

fn json_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(format!("invalid request body: {e}")))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreatedSession {
    pub api_version: u32,
    pub session_id: String,
    pub mode: Mode,
    pub state: Observation,
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let config: SessionConfig = json_body(&body)?;
    let id = state.manager().create(&config)?;
    let (mode, observation) = state.with_session(&id, |s| {
        state.publish(s.id(), s.events_from(0));
        (s.mode(), s.get_state(DEFAULT_RADIUS))
    })?;
    let created = CreatedSession { api_version: API_VERSION, session_id: id, mode, state: observation };
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

async fn list_sessions(State(state): State<AppState>) -> Json<Vec<String>> {
    Json(state.manager().ids())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChatRequest {
    text: String,
}

async fn chat(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let request: ChatRequest = json_body(&body)?;
    if request.text.trim().is_empty() {
        return Err(ApiError::BadRequest("chat text is empty".into()));
    }
    let summary = state.blocking(id, move |s| s.handle_chat(&request.text)).await??;
    Ok(Json(summary).into_response())
}

#[derive(Debug, Deserialize)]
struct StateQuery {
    radius: Option<i32>,
}

async fn session_state(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<StateQuery>,
) -> Result<Json<Observation>, ApiError> {
    let radius = query.radius.unwrap_or(DEFAULT_RADIUS);
    if radius < 0 {
        return Err(ApiError::BadRequest("radius must be non-negative".into()));
    }
    Ok(Json(state.blocking(id, move |s| s.get_state(radius)).await?))
}

async fn session_log(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionLog>, ApiError> {
    Ok(Json(state.blocking(id, |s| s.log().clone()).await?))
}

async fn end_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let summary = state.blocking(id, |s| s.end()).await??;
    Ok(Json(summary).into_response())
}

#[derive(Debug, Deserialize)]
struct EventsQuery {
    from_seq: Option<u64>,
}

async fn events(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<EventsQuery>,
    ws: WebSocketUpgrade,
) -> Result<Response, ApiError> {
    state.manager().get(&id)?;
    let from_seq = query.from_seq.unwrap_or(0);
    Ok(ws.on_upgrade(move |socket| stream_events(socket, state, id, from_seq)))
}

async fn send_event(socket: &mut WebSocket, event: &Event) -> bool {
    let frame = serde_json::to_string(event).expect("event serializes");
    socket.send(Message::Text(frame.into())).await.is_ok()
}

async fn stream_events(mut socket: WebSocket, state: AppState, id: String, from_seq: u64) {
    let (backlog, mut live) = state.subscribe(&id, from_seq);
    let mut next = from_seq;
    for event in &backlog {
        if !send_event(&mut socket, event).await {
            return;
        }
        next = event.seq + 1;
    }
    loop {
        tokio::select! {
            received = live.recv() => {
                let events = match received {
                    Ok(event) if event.seq < next => continue,
                    Ok(event) if event.seq == next => vec![event],
                    Ok(_) | Err(broadcast::error::RecvError::Lagged(_)) => state.replay(&id, next),
                    Err(broadcast::error::RecvError::Closed) => break,
                };
                for event in &events {
                    if !send_event(&mut socket, event).await {
                        return;
                    }
                    next = event.seq + 1;
                }
            }
            incoming = socket.recv() => match incoming {
                None | Some(Err(_)) | Some(Ok(Message::Close(_))) => break,
                Some(Ok(_)) => {}
            },
        }
    }
}

#[derive(Debug, Deserialize)]
struct AnalyticsQuery {
    mode: Option<Mode>,
}

async fn analytics(
    State(state): State<AppState>,
    Query(query): Query<AnalyticsQuery>,
) -> Result<Json<MetricsReport>, ApiError> {
    let state = state.clone();
    let report = tokio::task::spawn_blocking(move || -> Result<MetricsReport, ApiError> {
        let mut logs: BTreeMap<String, SessionLog> = BTreeMap::new();
        if let Some(dir) = &state.inner.log_dir {
            logs.extend(load_logs(dir, None)?.into_iter().map(|l| (l.session_id.clone(), l)));
        }
        logs.extend(state.manager().logs().into_iter().map(|l| (l.session_id.clone(), l)));
        let selected: Vec<SessionLog> = logs.into_values().filter(|l| query.mode.is_none_or(|m| l.mode == m)).collect();
        Ok(compute_metrics(&selected)?)
    })
    .await
    .map_err(|e| ApiError::Internal(e.to_string()))??;
    Ok(Json(report))
}
