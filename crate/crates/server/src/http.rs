//! HTTP and server-sent-events front end over a [`SessionManager`].

use std::convert::Infallible;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{Stream, StreamExt};
use memtrace_core::analysis::LayoutPrefs;
use serde::Deserialize;
use serde_json::json;
use tokio_stream::wrappers::BroadcastStream;
use tower_http::services::ServeDir;

use crate::session::{Action, CreateRequest, SessionError, SessionManager};

impl IntoResponse for SessionError {
    fn into_response(self) -> Response {
        let status = match &self {
            SessionError::UnknownSession(_) | SessionError::OutOfRange(_) => StatusCode::NOT_FOUND,
            SessionError::Diagnostic(_) | SessionError::Breakpoint { .. } | SessionError::BadRequest(_) => {
                StatusCode::BAD_REQUEST
            }
            SessionError::Finished | SessionError::Historical | SessionError::Boundary(_) => StatusCode::CONFLICT,
            SessionError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let mut body = json!({ "error": self.code(), "message": self.to_string() });
        match &self {
            SessionError::Diagnostic(d) => {
                body["line"] = json!(d.line);
                body["column"] = json!(d.column);
                body["kind"] = json!(d.kind);
            }
            SessionError::Breakpoint { line } => body["line"] = json!(line),
            _ => {}
        }
        (status, Json(body)).into_response()
    }
}

fn json_text(status: StatusCode, text: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], text).into_response()
}

/// Routes; `assets` (if given) is served for every other path.
pub fn router(manager: Arc<SessionManager>, assets: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(info))
        .route("/sessions/{id}/command", post(command))
        .route("/sessions/{id}/view", get(view))
        .route("/sessions/{id}/snapshot/{n}", get(snapshot))
        .route("/sessions/{id}/events", get(events))
        .with_state(manager);
    match assets {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

async fn create(State(m): State<Arc<SessionManager>>, Json(req): Json<CreateRequest>) -> Result<Response, SessionError> {
    let (session, payload) = m.create(req)?;
    let mut body = serde_json::to_value(&payload).expect("payload serializes");
    body["sessionId"] = json!(session.id());
    Ok(json_text(StatusCode::CREATED, body.to_string()))
}

async fn info(State(m): State<Arc<SessionManager>>, Path(id): Path<String>) -> Result<Response, SessionError> {
    Ok(Json(m.get(&id)?.info()).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct CommandRequest {
    action: String,
    arg: Option<u64>,
    skip_implicit: Option<bool>,
}

async fn command(
    State(m): State<Arc<SessionManager>>,
    Path(id): Path<String>,
    Json(req): Json<CommandRequest>,
) -> Result<Response, SessionError> {
    let session = m.get(&id)?;
    let action = Action::from_parts(&req.action, req.arg)?;
    if let Some(skip) = req.skip_implicit {
        session.set_skip_implicit(skip);
    }
    let text = tokio::task::spawn_blocking(move || session.command_json(action))
        .await
        .map_err(|e| SessionError::BadRequest(e.to_string()))??;
    Ok(json_text(StatusCode::OK, text))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ViewQuery {
    step: Option<u64>,
    filter_heap: Option<bool>,
    auto_minimize: Option<bool>,
}

async fn view(
    State(m): State<Arc<SessionManager>>,
    Path(id): Path<String>,
    Query(q): Query<ViewQuery>,
) -> Result<Response, SessionError> {
    let session = m.get(&id)?;
    let defaults = session.prefs();
    let prefs = LayoutPrefs {
        filter_heap: q.filter_heap.unwrap_or(defaults.filter_heap),
        auto_minimize: q.auto_minimize.unwrap_or(defaults.auto_minimize),
        ..defaults
    };
    Ok(json_text(StatusCode::OK, session.view(q.step, Some(&prefs))?.to_json()))
}

async fn snapshot(
    State(m): State<Arc<SessionManager>>,
    Path((id, n)): Path<(String, u64)>,
) -> Result<Response, SessionError> {
    Ok(json_text(StatusCode::OK, m.get(&id)?.snapshot_text(n)?))
}

async fn events(
    State(m): State<Arc<SessionManager>>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, SessionError> {
    let rx = m.get(&id)?.subscribe();
    // A lagging subscriber skips what it missed rather than disconnecting.
    let stream = BroadcastStream::new(rx)
        .filter_map(|msg| async move { msg.ok() })
        .map(|text| Ok(Event::default().event("step").data(text)));
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}
