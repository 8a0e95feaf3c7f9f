//! HTTP API.
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/api/sessions` | body `{"listener_id": ..}` → session info (201) |
//! | GET | `/api/sessions/{id}` | session info |
//! | GET | `/api/sessions/{id}/trial` | current trial view, or `{"complete": true}` |
//! | POST | `/api/sessions/{id}/trials/{trial_id}` | body `{"ratings": [{"stimulus_id", "score"}]}` → next view |
//! | GET | `/api/sessions/{id}/audio/{stimulus_id}` | WAV bytes |
//! | GET | `/api/export.csv` | score table of complete sessions (`?include_incomplete=true`) |
//!
//! Errors are `{"error": message}` with 404 (unknown session/stimulus),
//! 409 (duplicate session, wrong order, resubmission, complete) or 422
//! (invalid ratings).

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use crate::error::SessionError;
use crate::store::{ExportFilter, Rating, SessionStore, TrialView};

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<SessionStore>,
    /// Directory holding the rendered stimulus files.
    pub audio_dir: PathBuf,
}

#[derive(Debug, Deserialize)]
struct CreateSession {
    listener_id: String,
}

#[derive(Debug, Deserialize)]
struct Submission {
    ratings: Vec<Rating>,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
enum TrialResponse {
    Trial(TrialView),
    Complete { complete: bool },
}

impl From<Option<TrialView>> for TrialResponse {
    fn from(v: Option<TrialView>) -> Self {
        v.map_or(
            TrialResponse::Complete { complete: true },
            TrialResponse::Trial,
        )
    }
}

struct ApiError(SessionError);

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        use SessionError as E;
        let status = match &self.0 {
            E::UnknownSession(_) | E::UnknownStimulus(_) => StatusCode::NOT_FOUND,
            E::DuplicateActiveSession(_)
            | E::SessionComplete
            | E::AlreadySubmitted { .. }
            | E::WrongTrial { .. } => StatusCode::CONFLICT,
            E::EmptyListener
            | E::MissingRating(_)
            | E::NotInTrial(_)
            | E::DuplicateRating(_)
            | E::ScoreOutOfRange { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            log::error!("{}", self.0);
        }
        (
            status,
            Json(serde_json::json!({ "error": self.0.to_string() })),
        )
            .into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(session_info))
        .route("/api/sessions/{id}/trial", get(current_trial))
        .route("/api/sessions/{id}/trials/{trial_id}", post(submit_trial))
        .route("/api/sessions/{id}/audio/{stimulus_id}", get(audio))
        .route("/api/export.csv", get(export_csv))
        .with_state(state)
}

async fn create_session(
    State(app): State<AppState>,
    Json(body): Json<CreateSession>,
) -> ApiResult<impl IntoResponse> {
    let info = app.store.create_session(&body.listener_id)?;
    Ok((StatusCode::CREATED, Json(info)))
}

async fn session_info(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(app.store.session(&id)?))
}

async fn current_trial(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<TrialResponse>> {
    Ok(Json(app.store.current_trial(&id)?.into()))
}

async fn submit_trial(
    State(app): State<AppState>,
    Path((id, trial_id)): Path<(String, String)>,
    Json(body): Json<Submission>,
) -> ApiResult<Json<TrialResponse>> {
    // The store fsyncs; keep that off the async workers.
    let store = app.store.clone();
    let next =
        tokio::task::spawn_blocking(move || store.submit_trial(&id, &trial_id, &body.ratings))
            .await
            .map_err(|e| SessionError::Io(std::io::Error::other(e)))??;
    Ok(Json(next.into()))
}

async fn audio(
    State(app): State<AppState>,
    Path((id, stimulus)): Path<(String, String)>,
) -> ApiResult<Response> {
    let file = app.store.stimulus_file(&id, &stimulus)?;
    match tokio::fs::read(app.audio_dir.join(&file)).await {
        Ok(bytes) => Ok((
            [
                (header::CONTENT_TYPE, "audio/wav"),
                (header::CACHE_CONTROL, "private, max-age=3600"),
            ],
            bytes,
        )
            .into_response()),
        Err(e) => {
            log::error!("stimulus file {file}: {e}");
            Ok((
                StatusCode::NOT_FOUND,
                Json(serde_json::json!({ "error": "audio unavailable" })),
            )
                .into_response())
        }
    }
}

async fn export_csv(
    State(app): State<AppState>,
    Query(filter): Query<ExportFilter>,
) -> ApiResult<Response> {
    let body = app.store.export_csv(filter)?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], body).into_response())
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
