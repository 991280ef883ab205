#![allow(dead_code)]

use std::path::{Path, PathBuf};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use serde_json::Value;
use tower::ServiceExt;

use geodoc_service::{router, AppState, ServiceConfig};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

/// Deterministic stand-in media: byte `i` is `i % 251`.
pub fn fake_media(len: usize) -> Vec<u8> {
    (0..len).map(|i| (i % 251) as u8).collect()
}

pub struct Fixture {
    pub dir: tempfile::TempDir,
}

impl Fixture {
    /// A scene directory holding `scene_bytes` plus the given content files.
    pub fn new(scene_bytes: &[u8], files: &[(&str, &[u8])]) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let scenes = dir.path().join("scenes");
        std::fs::create_dir_all(scenes.join("content")).unwrap();
        std::fs::write(scenes.join("scene.json"), scene_bytes).unwrap();
        for (name, bytes) in files {
            std::fs::write(scenes.join(name), bytes).unwrap();
        }
        Self { dir }
    }

    pub fn lyon() -> Self {
        Self::new(
            &std::fs::read(fixture("four_modalities.scene.json")).unwrap(),
            &[
                ("content/photo-1760.jpg", b"jpeg-1760"),
                ("content/photo-2017.jpg", b"jpeg-2017"),
                ("content/interview.mp4", &fake_media(1000)),
            ],
        )
    }

    pub fn config(&self) -> ServiceConfig {
        ServiceConfig::new(self.dir.path().join("scenes"), self.dir.path().join("data"))
    }

    pub fn state(&self) -> AppState {
        AppState::open(self.config()).unwrap()
    }

    pub fn app(&self) -> Router {
        router(self.state())
    }
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: axum::http::HeaderMap,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body)
            .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.body)))
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.get(name).and_then(|v| v.to_str().ok())
    }
}

pub async fn send(app: &Router, request: Request<Body>) -> Reply {
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let headers = response.headers().clone();
    let body = axum::body::to_bytes(response.into_body(), usize::MAX)
        .await
        .unwrap()
        .to_vec();
    Reply {
        status,
        headers,
        body,
    }
}

pub async fn get(app: &Router, uri: &str) -> Reply {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

pub async fn post(app: &Router, uri: &str, body: Value) -> Reply {
    send(
        app,
        Request::post(uri)
            .header("content-type", "application/json")
            .body(Body::from(body.to_string()))
            .unwrap(),
    )
    .await
}

pub fn ids(value: &Value) -> Vec<String> {
    value
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect()
}
