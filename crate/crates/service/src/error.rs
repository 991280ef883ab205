use std::io;
use std::path::PathBuf;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use thiserror::Error;

use geodoc_core::scene::{ParseError, SceneReport};

/// Failures while starting the service.
#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    SceneParse { path: PathBuf, source: ParseError },
    #[error("{path}: scene fails validation: {}", summarize(.report))]
    InvalidScene { path: PathBuf, report: SceneReport },
    #[error("scene id {0} is defined more than once")]
    DuplicateScene(String),
    #[error("document id {0} is defined in more than one scene")]
    DuplicateDocument(String),
    #[error("viewer origin {0:?} is not a valid header value")]
    InvalidOrigin(String),
    #[error("http client: {0}")]
    HttpClient(String),
}

fn summarize(report: &SceneReport) -> String {
    report
        .findings
        .iter()
        .map(|f| format!("{} at {}: {}", f.code, f.path, f.message))
        .collect::<Vec<_>>()
        .join("; ")
}

impl ServiceError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Self {
        let path = path.into();
        move |source| ServiceError::Io { path, source }
    }
}

/// JSON error body returned by every endpoint.
#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field_path: Option<String>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            field_path: None,
        }
    }

    pub fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }

    pub fn bad_request(message: impl Into<String>, field_path: Option<String>) -> Self {
        Self {
            field_path,
            ..Self::new(StatusCode::BAD_REQUEST, "invalid_request", message)
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<geodoc_core::Error> for ApiError {
    fn from(e: geodoc_core::Error) -> Self {
        use geodoc_core::Error as E;
        let (status, code) = match &e {
            E::LockedContent { .. } => (StatusCode::CONFLICT, "locked_content"),
            E::DanglingReference { .. } => (StatusCode::NOT_FOUND, "unknown_document"),
            E::MisconfiguredGuidance(_) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "misconfigured_guidance")
            }
            E::UnsupportedMedia { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "unsupported_media"),
            E::DegenerateView => (StatusCode::UNPROCESSABLE_ENTITY, "degenerate_view"),
            _ => (StatusCode::BAD_REQUEST, "invalid_request"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}
