//! Scenes loaded from disk and the content behind their documents.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use sha2::{Digest, Sha256};

use geodoc_core::{parse_scene, serialize_scene, validate_scene, MediaKind, Scene};

use crate::content::{media_type_for, ContentEntry, ContentKey, ContentStore};
use crate::error::ServiceError;

#[derive(Debug)]
pub struct LoadedScene {
    pub scene: Scene,
    pub path: PathBuf,
    /// Canonical serialization, served as-is.
    pub canonical: Vec<u8>,
    /// Quoted strong ETag of `canonical`.
    pub etag: String,
}

/// Where the bytes of a document come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DocumentContent {
    Stored(ContentEntry),
    /// Web pages are not proxied; clients are sent to the page itself.
    Redirect(String),
    /// Remote media fetched on request.
    Remote(String),
    /// Local source that could not be found at load time.
    Missing(String),
}

#[derive(Debug, Clone)]
pub struct DocumentRef {
    pub scene_id: String,
    pub kind: MediaKind,
    pub content: DocumentContent,
}

#[derive(Debug, Default)]
pub struct Catalog {
    pub scenes: BTreeMap<String, Arc<LoadedScene>>,
    pub documents: HashMap<String, DocumentRef>,
}

impl Catalog {
    /// Load every `*.json` scene in `path` (or the single file `path`) and
    /// ingest local document sources into `store`.
    pub fn load(path: &Path, store: &ContentStore) -> Result<Self, ServiceError> {
        let files = if path.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(path)
                .map_err(ServiceError::io(path))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "json"))
                .collect();
            files.sort();
            files
        } else {
            vec![path.to_path_buf()]
        };

        let mut catalog = Catalog::default();
        for file in files {
            let bytes = std::fs::read(&file).map_err(ServiceError::io(&file))?;
            let scene = parse_scene(&bytes).map_err(|source| ServiceError::SceneParse {
                path: file.clone(),
                source,
            })?;
            let report = validate_scene(&scene);
            if !report.is_empty() {
                return Err(ServiceError::InvalidScene { path: file, report });
            }
            catalog.insert(scene, file, store)?;
        }
        Ok(catalog)
    }

    pub fn insert(
        &mut self,
        scene: Scene,
        path: PathBuf,
        store: &ContentStore,
    ) -> Result<(), ServiceError> {
        if self.scenes.contains_key(&scene.scene_id) {
            return Err(ServiceError::DuplicateScene(scene.scene_id));
        }
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        for doc in &scene.documents {
            if self.documents.contains_key(&doc.id) {
                return Err(ServiceError::DuplicateDocument(doc.id.clone()));
            }
            let content = resolve_source(&doc.source, doc.kind, &base, store)?;
            self.documents.insert(
                doc.id.clone(),
                DocumentRef {
                    scene_id: scene.scene_id.clone(),
                    kind: doc.kind,
                    content,
                },
            );
        }
        let canonical = serialize_scene(&scene);
        let etag = format!("\"{}\"", hex::encode(Sha256::digest(&canonical)));
        tracing::info!(scene = %scene.scene_id, path = %path.display(), documents = scene.documents.len(), "loaded scene");
        self.scenes.insert(
            scene.scene_id.clone(),
            Arc::new(LoadedScene {
                scene,
                path,
                canonical,
                etag,
            }),
        );
        Ok(())
    }
}

fn is_remote(source: &str) -> bool {
    let lower = source.to_ascii_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://")
}

fn resolve_source(
    source: &str,
    kind: MediaKind,
    base: &Path,
    store: &ContentStore,
) -> Result<DocumentContent, ServiceError> {
    if is_remote(source) {
        return Ok(if kind == MediaKind::WebPage {
            DocumentContent::Redirect(source.to_string())
        } else {
            DocumentContent::Remote(source.to_string())
        });
    }
    if source.starts_with("sha256:") {
        let entry = ContentKey::parse(source)
            .map(|key| store.entry(&key))
            .transpose()
            .map_err(ServiceError::io(store_path_hint(source)))?
            .flatten();
        return Ok(entry.map_or_else(
            || DocumentContent::Missing(source.to_string()),
            DocumentContent::Stored,
        ));
    }

    let local = source.strip_prefix("file://").unwrap_or(source);
    let path = base.join(local);
    match std::fs::read(&path) {
        Ok(bytes) => {
            let media_type = media_type_for(local).unwrap_or(kind.default_media_type());
            let entry = store
                .put(&bytes, media_type)
                .map_err(ServiceError::io(&path))?;
            Ok(DocumentContent::Stored(entry))
        }
        Err(e) => {
            tracing::warn!(path = %path.display(), error = %e, "document source not readable");
            Ok(DocumentContent::Missing(source.to_string()))
        }
    }
}

fn store_path_hint(source: &str) -> PathBuf {
    PathBuf::from(source)
}
