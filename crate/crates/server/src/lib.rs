//! Replay service: run listing, frame ranges and a playback stream per
//! WebSocket connection.
//!
//! Routes:
//!
//! * `GET /runs`
//! * `GET /runs/{id}`
//! * `GET /runs/{id}/frames?from=&to=`
//! * `GET /runs/{id}/report`
//! * `GET /runs/{id}/stream` (WebSocket; text commands `play`, `pause`,
//!   `seek <seconds>`, `rate <multiplier>`)

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use dipt_core::replay::{PlaybackSession, ReplayError, ReplayStore, ServerMessage};
use serde::Deserialize;
use tokio::time::{sleep_until, Instant};

pub const DATA_DIR_ENV: &str = "DIPT_DATA_DIR";
pub const LISTEN_ENV: &str = "DIPT_LISTEN";
pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";

struct ApiError(ReplayError);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self.0 {
            ReplayError::RunNotFound(_) => StatusCode::NOT_FOUND,
            ReplayError::BadRange { .. } | ReplayError::MalformedCommand(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(serde_json::json!({ "error": self.0.to_string() }))).into_response()
    }
}

impl From<ReplayError> for ApiError {
    fn from(e: ReplayError) -> Self {
        ApiError(e)
    }
}

type Shared = Arc<ReplayStore>;

pub fn router(store: Shared) -> Router {
    Router::new()
        .route("/runs", get(list_runs))
        .route("/runs/{id}", get(get_run))
        .route("/runs/{id}/frames", get(get_frames))
        .route("/runs/{id}/report", get(get_report))
        .route("/runs/{id}/stream", get(stream))
        .with_state(store)
}

async fn list_runs(State(store): State<Shared>) -> impl IntoResponse {
    Json(store.list_runs().to_vec())
}

async fn get_run(State(store): State<Shared>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let entry = store.run(&id)?;
    let overlay = store.overlay(&id)?;
    let mut v = serde_json::to_value(entry).expect("serializable");
    v["frame_count"] = overlay.frames.len().into();
    v["tick_hz"] = overlay.tick_hz.into();
    Ok(Json(v))
}

#[derive(Deserialize)]
struct Range {
    from: Option<f64>,
    to: Option<f64>,
}

async fn get_frames(
    State(store): State<Shared>,
    Path(id): Path<String>,
    Query(range): Query<Range>,
) -> Result<impl IntoResponse, ApiError> {
    let overlay = store.overlay(&id)?;
    let from = range.from.unwrap_or(f64::NEG_INFINITY);
    let to = range.to.unwrap_or(f64::INFINITY);
    if from > to || from.is_nan() || to.is_nan() {
        return Err(ReplayError::BadRange { from, to }.into());
    }
    Ok(Json(overlay.frames_between(from, to).to_vec()))
}

async fn get_report(State(store): State<Shared>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    Ok(Json(store.overlay(&id)?.report.clone()))
}

async fn stream(
    State(store): State<Shared>,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> Result<Response, ApiError> {
    let session = store.session(&id)?;
    Ok(ws.on_upgrade(move |socket| drive(socket, session)))
}

async fn send(socket: &mut WebSocket, msg: &ServerMessage) -> bool {
    let text = serde_json::to_string(msg).expect("serializable");
    socket.send(Message::Text(text.into())).await.is_ok()
}

/// One task per connection: commands and frame deadlines are handled in
/// order, so nothing is sent between a pause acknowledgment and the next
/// play.
async fn drive(mut socket: WebSocket, mut session: PlaybackSession) {
    let mut due: Option<Instant> = None;
    let mut last_emit: Option<Instant> = None;
    loop {
        let deadline = due.filter(|_| session.is_playing());
        tokio::select! {
            incoming = socket.recv() => {
                let text = match incoming {
                    Some(Ok(Message::Text(t))) => t.to_string(),
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                    Some(Ok(_)) => continue,
                };
                let was_playing = session.is_playing();
                for msg in session.apply_text(&text) {
                    if !send(&mut socket, &msg).await {
                        return;
                    }
                }
                if !session.is_playing() {
                    due = None;
                } else if !was_playing {
                    due = Some(Instant::now());
                } else if text.trim_start().starts_with("rate") {
                    due = Some(last_emit.map_or_else(Instant::now, |t| t + session.frame_interval()));
                }
            }
            _ = sleep_until(deadline.unwrap_or_else(Instant::now)), if deadline.is_some() => {
                if let Some(msg) = session.next_frame() {
                    if !send(&mut socket, &msg).await {
                        return;
                    }
                    let now = Instant::now();
                    last_emit = Some(now);
                    due = Some(now + session.frame_interval());
                }
            }
        }
    }
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(store: ReplayStore, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("replay service on {}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(store))).await
}
