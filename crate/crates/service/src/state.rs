//! Shared service state: loaded scenes, content and guidance sessions.

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use chrono::{DateTime, Utc};
use serde::Serialize;
use tokio::sync::Mutex;

use geodoc_core::guidance::{available_documents, new_session, progress, record_view};
use geodoc_core::{GuidanceMode, GuidanceState, GuidedScene, TravelConfig};

use crate::catalog::{Catalog, LoadedScene};
use crate::content::ContentStore;
use crate::error::{ApiError, ServiceError};
use crate::journal::{Journal, JournalEvent};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Directory of scene files, or a single scene file.
    pub scene_dir: PathBuf,
    /// Holds the blob store and the session journal.
    pub data_dir: PathBuf,
    /// Origin allowed to call the API from a browser; `*` allows any.
    pub viewer_origin: Option<String>,
    pub travel: TravelConfig,
}

impl ServiceConfig {
    pub fn new(scene_dir: impl Into<PathBuf>, data_dir: impl Into<PathBuf>) -> Self {
        Self {
            scene_dir: scene_dir.into(),
            data_dir: data_dir.into(),
            viewer_origin: None,
            travel: TravelConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    pub session_id: String,
    pub state: GuidanceState,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionSnapshot {
    pub session_id: String,
    pub scene_id: String,
    pub mode: GuidanceMode,
    pub viewed: BTreeSet<String>,
    pub available: BTreeSet<String>,
    pub locked: BTreeSet<String>,
    pub progress: f64,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

#[derive(Debug)]
pub(crate) struct Inner {
    pub config: ServiceConfig,
    pub catalog: Catalog,
    pub store: ContentStore,
    pub journal: Journal,
    pub sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    pub http: reqwest::Client,
}

#[derive(Debug, Clone)]
pub struct AppState {
    pub(crate) inner: Arc<Inner>,
}

impl AppState {
    /// Load scenes, ingest content and replay the session journal.
    pub fn open(config: ServiceConfig) -> Result<Self, ServiceError> {
        let data_dir = config.data_dir.clone();
        std::fs::create_dir_all(&data_dir).map_err(ServiceError::io(&data_dir))?;
        let store = ContentStore::open(data_dir.join("blobs"))
            .map_err(ServiceError::io(data_dir.join("blobs")))?;
        let catalog = Catalog::load(&config.scene_dir, &store)?;
        let journal_path = data_dir.join("sessions.jsonl");
        let (journal, events) =
            Journal::open(&journal_path).map_err(ServiceError::io(&journal_path))?;
        let http = reqwest::Client::builder()
            .timeout(std::time::Duration::from_secs(15))
            .build()
            .map_err(|e| ServiceError::HttpClient(e.to_string()))?;
        if let Some(origin) = config.viewer_origin.as_deref() {
            if origin != "*" && axum::http::HeaderValue::from_str(origin).is_err() {
                return Err(ServiceError::InvalidOrigin(origin.to_string()));
            }
        }

        let sessions = replay(&catalog, events);
        tracing::info!(
            scenes = catalog.scenes.len(),
            sessions = sessions.len(),
            "service state ready"
        );
        Ok(Self {
            inner: Arc::new(Inner {
                config,
                catalog,
                store,
                journal,
                sessions: RwLock::new(
                    sessions
                        .into_iter()
                        .map(|(k, v)| (k, Arc::new(Mutex::new(v))))
                        .collect(),
                ),
                http,
            }),
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.inner.config
    }

    pub fn catalog(&self) -> &Catalog {
        &self.inner.catalog
    }

    pub fn scene(&self, id: &str) -> Option<&Arc<LoadedScene>> {
        self.inner.catalog.scenes.get(id)
    }

    /// Flush the journal to stable storage.
    pub fn sync(&self) -> std::io::Result<()> {
        self.inner.journal.sync()
    }

    fn session_handle(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.inner
            .sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("unknown_session", format!("no session {id}")))
    }

    fn scene_or_404(&self, id: &str) -> Result<&Arc<LoadedScene>, ApiError> {
        self.scene(id)
            .ok_or_else(|| ApiError::not_found("unknown_scene", format!("no scene {id}")))
    }

    pub fn create_session(
        &self,
        scene_id: &str,
        mode: Option<GuidanceMode>,
    ) -> Result<SessionSnapshot, ApiError> {
        let loaded = self.scene_or_404(scene_id)?;
        let mode = mode.unwrap_or(loaded.scene.default_mode());
        let state = new_session(&loaded.scene, mode)?;
        let now = Utc::now();
        let session = Session {
            session_id: uuid::Uuid::new_v4().simple().to_string(),
            state,
            created_at: now,
            updated_at: now,
        };
        self.inner
            .journal
            .append(&JournalEvent::Created {
                session_id: session.session_id.clone(),
                scene_id: scene_id.to_string(),
                mode,
                at: now,
            })
            .map_err(|e| ApiError::internal(format!("could not record session: {e}")))?;
        let snapshot = snapshot(&session, loaded);
        self.inner
            .sessions
            .write()
            .unwrap_or_else(|p| p.into_inner())
            .insert(session.session_id.clone(), Arc::new(Mutex::new(session)));
        Ok(snapshot)
    }

    pub async fn session(&self, id: &str) -> Result<SessionSnapshot, ApiError> {
        let handle = self.session_handle(id)?;
        let session = handle.lock().await;
        let loaded = self.scene_or_404(&session.state.scene_ref)?;
        Ok(snapshot(&session, loaded))
    }

    /// Record a view. Views of one session are applied one at a time, in
    /// arrival order, and each is journaled before it takes effect.
    pub async fn record_view(
        &self,
        id: &str,
        document_id: &str,
    ) -> Result<SessionSnapshot, ApiError> {
        let handle = self.session_handle(id)?;
        let mut session = handle.lock().await;
        let loaded = self.scene_or_404(&session.state.scene_ref)?;
        let next = record_view(&session.state, document_id, &loaded.scene)?;
        if next != session.state {
            let now = Utc::now();
            self.inner
                .journal
                .append(&JournalEvent::Viewed {
                    session_id: id.to_string(),
                    document_id: document_id.to_string(),
                    at: now,
                })
                .map_err(|e| ApiError::internal(format!("could not record view: {e}")))?;
            session.state = next;
            session.updated_at = now;
        }
        Ok(snapshot(&session, loaded))
    }
}

fn snapshot(session: &Session, loaded: &LoadedScene) -> SessionSnapshot {
    let scene = &loaded.scene;
    let available = available_documents(&session.state, scene);
    let locked = scene
        .document_ids()
        .difference(&available)
        .cloned()
        .collect();
    SessionSnapshot {
        session_id: session.session_id.clone(),
        scene_id: scene.scene_id.clone(),
        mode: session.state.mode,
        viewed: session.state.viewed.clone(),
        available,
        locked,
        progress: progress(&session.state, scene),
        created_at: session.created_at,
        updated_at: session.updated_at,
    }
}

fn replay(catalog: &Catalog, events: Vec<JournalEvent>) -> HashMap<String, Session> {
    let mut sessions: HashMap<String, Session> = HashMap::new();
    for event in events {
        match event {
            JournalEvent::Created {
                session_id,
                scene_id,
                mode,
                at,
            } => {
                let Some(loaded) = catalog.scenes.get(&scene_id) else {
                    tracing::warn!(session = %session_id, scene = %scene_id, "dropping session of unknown scene");
                    continue;
                };
                match new_session(&loaded.scene, mode) {
                    Ok(state) => {
                        sessions.insert(
                            session_id.clone(),
                            Session {
                                session_id,
                                state,
                                created_at: at,
                                updated_at: at,
                            },
                        );
                    }
                    Err(e) => tracing::warn!(session = %session_id, error = %e, "dropping session"),
                }
            }
            JournalEvent::Viewed {
                session_id,
                document_id,
                at,
            } => {
                let Some(session) = sessions.get_mut(&session_id) else {
                    continue;
                };
                let scene = &catalog.scenes[&session.state.scene_ref].scene;
                match record_view(&session.state, &document_id, scene) {
                    Ok(next) => {
                        session.state = next;
                        session.updated_at = at;
                    }
                    Err(e) => {
                        tracing::warn!(session = %session_id, error = %e, "skipping journaled view")
                    }
                }
            }
        }
    }
    sessions
}
