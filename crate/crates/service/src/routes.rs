use std::collections::HashMap;

use axum::body::{Body, Bytes};
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::header::{self, HeaderMap, HeaderValue};
use axum::http::{Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::cors::{AllowOrigin, Any, CorsLayer};
use tower_http::trace::TraceLayer;

use geodoc_core::{build_view_plan, CameraPose, GuidanceMode};

use crate::catalog::DocumentContent;
use crate::error::ApiError;
use crate::state::AppState;
use crate::wms::{build_wms_map_url, BBox};

pub fn router(state: AppState) -> Router {
    let cors = state.config().viewer_origin.as_deref().map(cors_layer);
    let router = Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/scenes", get(list_scenes))
        .route("/scenes/{id}", get(get_scene))
        .route("/scenes/{id}/sessions", post(create_session))
        .route("/scenes/{id}/layers/{layer}/map", get(layer_map_url))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/views", post(record_view))
        .route("/sessions/{id}/view-plans", post(view_plan))
        .route("/documents/{id}/content", get(document_content))
        .fallback(|| async { ApiError::not_found("not_found", "no such route") })
        .method_not_allowed_fallback(|| async {
            ApiError::new(
                StatusCode::METHOD_NOT_ALLOWED,
                "method_not_allowed",
                "method not allowed",
            )
        })
        .layer(TraceLayer::new_for_http())
        .with_state(state);
    match cors {
        Some(cors) => router.layer(cors),
        None => router,
    }
}

fn cors_layer(origin: &str) -> CorsLayer {
    let allow_origin = if origin == "*" {
        AllowOrigin::from(Any)
    } else {
        // validated when the state was opened
        AllowOrigin::list([HeaderValue::from_str(origin).expect("valid origin")])
    };
    CorsLayer::new()
        .allow_origin(allow_origin)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE, header::IF_NONE_MATCH, header::RANGE])
        .expose_headers([header::ETAG, header::CONTENT_RANGE, header::ACCEPT_RANGES])
}

fn parse_body<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, ApiError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        ApiError::bad_request(e.inner().to_string(), (path != ".").then_some(path))
    })?;
    de.end()
        .map_err(|e| ApiError::bad_request(e.to_string(), None))?;
    Ok(value)
}

fn etag_matches(headers: &HeaderMap, etag: &str) -> bool {
    headers
        .get_all(header::IF_NONE_MATCH)
        .iter()
        .filter_map(|v| v.to_str().ok())
        .flat_map(|v| v.split(','))
        .map(|tag| tag.trim())
        .any(|tag| tag == "*" || tag.trim_start_matches("W/") == etag)
}

fn not_modified(etag: &str) -> Response {
    (StatusCode::NOT_MODIFIED, [(header::ETAG, etag.to_string())]).into_response()
}

#[derive(Serialize)]
struct SceneSummary {
    id: String,
    title: String,
    documents: usize,
    mode: GuidanceMode,
}

async fn list_scenes(State(state): State<AppState>) -> Json<Vec<SceneSummary>> {
    let scenes = state
        .catalog()
        .scenes
        .values()
        .map(|s| SceneSummary {
            id: s.scene.scene_id.clone(),
            title: s.scene.title.clone(),
            documents: s.scene.documents.len(),
            mode: s.scene.guidance.mode,
        })
        .collect();
    Json(scenes)
}

async fn get_scene(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let loaded = state
        .scene(&id)
        .ok_or_else(|| ApiError::not_found("unknown_scene", format!("no scene {id}")))?;
    if etag_matches(&headers, &loaded.etag) {
        return Ok(not_modified(&loaded.etag));
    }
    Ok((
        [
            (header::CONTENT_TYPE, "application/json".to_string()),
            (header::ETAG, loaded.etag.clone()),
        ],
        loaded.canonical.clone(),
    )
        .into_response())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    #[serde(default)]
    mode: Option<GuidanceMode>,
}

async fn create_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let request: CreateSession = if body.iter().all(u8::is_ascii_whitespace) {
        CreateSession::default()
    } else {
        parse_body(&body)?
    };
    let snapshot = state.create_session(&id, request.mode)?;
    Ok((StatusCode::CREATED, Json(snapshot)).into_response())
}

async fn get_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    Ok(Json(state.session(&id).await?).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordView {
    document_id: String,
}

async fn record_view(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let request: RecordView = parse_body(&body)?;
    Ok(Json(state.record_view(&id, &request.document_id).await?).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ViewPlanRequest {
    entity_id: String,
    camera: CameraPose,
}

/// Camera travel and overlay for an extended document the session may open.
async fn view_plan(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let request: ViewPlanRequest = parse_body(&body)?;
    let session = state.session(&id).await?;
    let loaded = state.scene(&session.scene_id).ok_or_else(|| {
        ApiError::not_found("unknown_scene", format!("no scene {}", session.scene_id))
    })?;
    let entity = loaded
        .scene
        .entities
        .extended_documents
        .iter()
        .find(|e| e.entity_id == request.entity_id)
        .ok_or_else(|| {
            ApiError::not_found(
                "unknown_entity",
                format!("no extended document {}", request.entity_id),
            )
        })?;
    if !session.available.contains(&entity.document_id) {
        return Err(geodoc_core::Error::LockedContent {
            document_id: entity.document_id.clone(),
        }
        .into());
    }
    let document = loaded.scene.document(&entity.document_id).ok_or_else(|| {
        ApiError::not_found(
            "unknown_document",
            format!("no document {}", entity.document_id),
        )
    })?;
    let plan = build_view_plan(entity, document, &request.camera, &state.config().travel)?;
    Ok(Json(plan).into_response())
}

#[derive(Serialize)]
struct MapUrl {
    url: String,
}

fn required<'a>(query: &'a HashMap<String, String>, name: &str) -> Result<&'a str, ApiError> {
    query.get(name).map(String::as_str).ok_or_else(|| {
        ApiError::bad_request(
            format!("missing query parameter {name}"),
            Some(name.to_string()),
        )
    })
}

fn number<T: std::str::FromStr>(text: &str, name: &str) -> Result<T, ApiError> {
    text.trim().parse().map_err(|_| {
        ApiError::bad_request(
            format!("{name} is not a valid number: {text:?}"),
            Some(name.to_string()),
        )
    })
}

async fn layer_map_url(
    State(state): State<AppState>,
    Path((id, layer)): Path<(String, String)>,
    query: Result<Query<HashMap<String, String>>, QueryRejection>,
) -> Result<Response, ApiError> {
    let Query(query) = query.map_err(|e| ApiError::bad_request(e.body_text(), None))?;
    let loaded = state
        .scene(&id)
        .ok_or_else(|| ApiError::not_found("unknown_scene", format!("no scene {id}")))?;
    let layer = loaded
        .scene
        .layer_refs
        .iter()
        .find(|l| l.layer_name == layer)
        .ok_or_else(|| {
            ApiError::not_found("unknown_layer", format!("no layer {layer} in scene {id}"))
        })?;
    let parts: Vec<f64> = required(&query, "bbox")?
        .split(',')
        .map(|p| number(p, "bbox"))
        .collect::<Result<_, _>>()?;
    let [min_x, min_y, max_x, max_y] = parts[..] else {
        return Err(ApiError::bad_request(
            "bbox needs four numbers",
            Some("bbox".into()),
        ));
    };
    let url = build_wms_map_url(
        layer,
        &BBox::new(min_x, min_y, max_x, max_y),
        number(required(&query, "width")?, "width")?,
        number(required(&query, "height")?, "height")?,
        required(&query, "crs")?,
    )
    .map_err(|e| ApiError::bad_request(e.to_string(), None))?;
    Ok(Json(MapUrl { url }).into_response())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ByteRange {
    Full,
    Partial { start: u64, end: u64 },
    Unsatisfiable,
}

/// Single-range `Range` header. Anything malformed or multi-range is
/// ignored and the full body is sent.
pub(crate) fn parse_range(header: Option<&str>, len: u64) -> ByteRange {
    let Some(spec) = header.and_then(|h| h.trim().strip_prefix("bytes=")) else {
        return ByteRange::Full;
    };
    if spec.contains(',') {
        return ByteRange::Full;
    }
    let Some((first, last)) = spec.split_once('-') else {
        return ByteRange::Full;
    };
    let (first, last) = (first.trim(), last.trim());
    let parse = |s: &str| s.parse::<u64>().ok();
    match (first.is_empty(), last.is_empty()) {
        (true, false) => match parse(last) {
            Some(0) => ByteRange::Unsatisfiable,
            Some(_) if len == 0 => ByteRange::Unsatisfiable,
            Some(n) => ByteRange::Partial {
                start: len.saturating_sub(n),
                end: len - 1,
            },
            None => ByteRange::Full,
        },
        (false, _) => {
            let Some(start) = parse(first) else {
                return ByteRange::Full;
            };
            let end = if last.is_empty() {
                Some(u64::MAX)
            } else {
                parse(last)
            };
            match end {
                None => ByteRange::Full,
                Some(end) if end < start => ByteRange::Full,
                Some(_) if start >= len => ByteRange::Unsatisfiable,
                Some(end) => ByteRange::Partial {
                    start,
                    end: end.min(len - 1),
                },
            }
        }
        (true, true) => ByteRange::Full,
    }
}

async fn document_content(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let doc = state
        .catalog()
        .documents
        .get(&id)
        .ok_or_else(|| ApiError::not_found("unknown_document", format!("no document {id}")))?;
    match &doc.content {
        DocumentContent::Redirect(url) => Ok((
            StatusCode::TEMPORARY_REDIRECT,
            [(header::LOCATION, url.clone())],
        )
            .into_response()),
        DocumentContent::Missing(source) => Err(ApiError::not_found(
            "content_missing",
            format!("content of {id} ({source}) is not available"),
        )),
        DocumentContent::Remote(url) => proxy(&state, url, doc.kind.default_media_type()).await,
        DocumentContent::Stored(entry) => {
            let etag = format!("\"{}\"", entry.key.as_str());
            if etag_matches(&headers, &etag) {
                return Ok(not_modified(&etag));
            }
            let store = &state.inner.store;
            let io_error =
                |e: std::io::Error| ApiError::internal(format!("reading content of {id}: {e}"));
            let range = if doc.kind.is_video() {
                parse_range(
                    headers.get(header::RANGE).and_then(|v| v.to_str().ok()),
                    entry.length,
                )
            } else {
                ByteRange::Full
            };
            let mut builder = Response::builder()
                .header(header::CONTENT_TYPE, &entry.media_type)
                .header(header::ETAG, &etag);
            if doc.kind.is_video() {
                builder = builder.header(header::ACCEPT_RANGES, "bytes");
            }
            let response = match range {
                ByteRange::Full => builder
                    .status(StatusCode::OK)
                    .body(Body::from(store.read(&entry.key).await.map_err(io_error)?)),
                ByteRange::Partial { start, end } => builder
                    .status(StatusCode::PARTIAL_CONTENT)
                    .header(
                        header::CONTENT_RANGE,
                        format!("bytes {start}-{end}/{}", entry.length),
                    )
                    .body(Body::from(
                        store
                            .read_range(&entry.key, start, end)
                            .await
                            .map_err(io_error)?,
                    )),
                ByteRange::Unsatisfiable => builder
                    .status(StatusCode::RANGE_NOT_SATISFIABLE)
                    .header(header::CONTENT_RANGE, format!("bytes */{}", entry.length))
                    .body(Body::empty()),
            };
            response.map_err(|e| ApiError::internal(e.to_string()))
        }
    }
}

async fn proxy(state: &AppState, url: &str, fallback_type: &str) -> Result<Response, ApiError> {
    let upstream_error =
        |message: String| ApiError::new(StatusCode::BAD_GATEWAY, "upstream_unavailable", message);
    let response = state
        .inner
        .http
        .get(url)
        .send()
        .await
        .map_err(|e| upstream_error(format!("fetching {url}: {e}")))?;
    if !response.status().is_success() {
        return Err(upstream_error(format!(
            "{url} answered {}",
            response.status()
        )));
    }
    let content_type = response
        .headers()
        .get(reqwest::header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or(fallback_type)
        .to_string();
    let bytes = response
        .bytes()
        .await
        .map_err(|e| upstream_error(format!("reading {url}: {e}")))?;
    Ok(([(header::CONTENT_TYPE, content_type)], bytes).into_response())
}
