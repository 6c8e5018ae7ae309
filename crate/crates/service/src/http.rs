//! Axum routes over a [`SessionStore`].

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde_json::json;

use crate::api::{CreateSessionRequest, ErrorBody, StepRequest};
use crate::store::{ServiceError, SessionStore};

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match self {
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Conflict(_) => StatusCode::CONFLICT,
            ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = ErrorBody {
            error: self.kind().to_string(),
            message: self.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ServiceError> {
    let text = std::str::from_utf8(body).map_err(|e| ServiceError::BadRequest(format!("body is not UTF-8: {e}")))?;
    serde_json::from_str(text).map_err(|e| ServiceError::BadRequest(e.to_string()))
}

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(transcript))
        .route("/sessions/{id}/step", post(step))
        .with_state(store)
}

async fn health(State(store): State<Arc<SessionStore>>) -> Response {
    Json(json!({
        "status": "ok",
        "sessions": store.session_count(),
        "diseases": store.network().diseases().len(),
        "symptoms": store.network().symptoms().len(),
    }))
    .into_response()
}

async fn create_session(State(store): State<Arc<SessionStore>>, body: Bytes) -> Result<Response, ServiceError> {
    let req: CreateSessionRequest = if body.iter().all(u8::is_ascii_whitespace) {
        CreateSessionRequest { complaints: Vec::new() }
    } else {
        parse(&body)?
    };
    Ok(Json(store.create(req.complaints).await?).into_response())
}

async fn step(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ServiceError> {
    let req: StepRequest = parse(&body)?;
    Ok(Json(store.step(&id, req).await?).into_response())
}

async fn transcript(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    Ok(Json(store.transcript(&id).await?).into_response())
}
