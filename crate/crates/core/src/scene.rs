//! Scene files: typed model, canonical JSON, validation, and the importer
//! for legacy `episode-N-data` pin configurations.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::document::{MediaKind, MultimediaDocument, Thumbnail};
use crate::geo::{GeodeticCoord, Vec3};
use crate::guidance::{validate_guidance_graph, GuidanceGraph, GuidanceMode, GuidedScene};
use crate::modalities::{
    supports_overlay, ExtendedDocumentEntity, GeoPin, GeoWebBoard, ScreenAnchor, Slideshow,
};
use crate::numeric::parse_finite;

pub const SCHEMA_VERSION: &str = "1";

const KNOWN_KEYS: [&str; 12] = [
    "schema_version",
    "id",
    "title",
    "crs_note",
    "origin",
    "documents",
    "thumbnails",
    "entities",
    "guidance",
    "tileset_refs",
    "layer_refs",
    "extensions",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeoserviceKind {
    Wms,
    Wfs,
}

/// A WMS or WFS layer displayed over the scene.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeoserviceLayer {
    pub kind: GeoserviceKind,
    pub base_url: String,
    pub layer_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_style: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SceneEntities {
    #[serde(default)]
    pub pins: Vec<GeoPin>,
    #[serde(default)]
    pub web_boards: Vec<GeoWebBoard>,
    #[serde(default)]
    pub extended_documents: Vec<ExtendedDocumentEntity>,
    #[serde(default)]
    pub slideshows: Vec<Slideshow>,
}

impl SceneEntities {
    pub fn entity_ids(&self) -> impl Iterator<Item = &str> {
        self.pins
            .iter()
            .map(|e| e.entity_id.as_str())
            .chain(self.web_boards.iter().map(|e| e.entity_id.as_str()))
            .chain(self.extended_documents.iter().map(|e| e.entity_id.as_str()))
            .chain(self.slideshows.iter().map(|e| e.entity_id.as_str()))
    }
}

/// Default access mode plus the graph driving it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "FlatGuidance", into = "FlatGuidance")]
pub struct SceneGuidance {
    pub mode: GuidanceMode,
    pub graph: GuidanceGraph,
}

#[derive(Serialize, Deserialize)]
struct FlatGuidance {
    #[serde(default)]
    mode: GuidanceMode,
    #[serde(default)]
    prerequisites: BTreeMap<String, BTreeSet<String>>,
    #[serde(default)]
    order: Vec<String>,
}

impl From<FlatGuidance> for SceneGuidance {
    fn from(f: FlatGuidance) -> Self {
        SceneGuidance {
            mode: f.mode,
            graph: GuidanceGraph {
                prerequisites: f.prerequisites,
                order: f.order,
            },
        }
    }
}

impl From<SceneGuidance> for FlatGuidance {
    fn from(g: SceneGuidance) -> Self {
        FlatGuidance {
            mode: g.mode,
            prerequisites: g.graph.prerequisites,
            order: g.graph.order,
        }
    }
}

fn schema_v1() -> String {
    SCHEMA_VERSION.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    #[serde(default = "schema_v1")]
    pub schema_version: String,
    #[serde(rename = "id")]
    pub scene_id: String,
    pub title: String,
    /// Where the scene coordinates come from (projected CRS, local survey, ...).
    #[serde(default)]
    pub crs_note: String,
    /// Geodetic position of the local frame origin, when documents are tagged in WGS84.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<GeodeticCoord>,
    #[serde(default)]
    pub documents: Vec<MultimediaDocument>,
    #[serde(default)]
    pub thumbnails: Vec<Thumbnail>,
    #[serde(default)]
    pub entities: SceneEntities,
    #[serde(default)]
    pub guidance: SceneGuidance,
    /// Opaque references to 3D city geometry tilesets.
    #[serde(default)]
    pub tileset_refs: Vec<String>,
    #[serde(default)]
    pub layer_refs: Vec<GeoserviceLayer>,
    /// Unknown top-level fields, kept for forward compatibility.
    #[serde(skip)]
    pub extensions: BTreeMap<String, Value>,
}

impl Scene {
    pub fn new(scene_id: impl Into<String>, title: impl Into<String>) -> Self {
        Self {
            schema_version: schema_v1(),
            scene_id: scene_id.into(),
            title: title.into(),
            crs_note: String::new(),
            origin: None,
            documents: Vec::new(),
            thumbnails: Vec::new(),
            entities: SceneEntities::default(),
            guidance: SceneGuidance::default(),
            tileset_refs: Vec::new(),
            layer_refs: Vec::new(),
            extensions: BTreeMap::new(),
        }
    }

    pub fn document(&self, id: &str) -> Option<&MultimediaDocument> {
        self.documents.iter().find(|d| d.id == id)
    }
}

impl GuidedScene for Scene {
    fn scene_id(&self) -> &str {
        &self.scene_id
    }

    fn document_ids(&self) -> BTreeSet<String> {
        self.documents.iter().map(|d| d.id.clone()).collect()
    }

    fn guidance_graph(&self) -> &GuidanceGraph {
        &self.guidance.graph
    }

    fn default_mode(&self) -> GuidanceMode {
        self.guidance.mode
    }

    fn has_document(&self, id: &str) -> bool {
        self.documents.iter().any(|d| d.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset} (line {line}, column {column}): {message}")]
    Syntax {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Field { path: String, message: String },
}

impl ParseError {
    pub fn field_path(&self) -> Option<&str> {
        match self {
            ParseError::Field { path, .. } => Some(path),
            ParseError::Syntax { .. } => None,
        }
    }

    fn field(path: impl Into<String>, message: impl Into<String>) -> Self {
        ParseError::Field {
            path: path.into(),
            message: message.into(),
        }
    }
}

fn syntax_error(bytes: &[u8], err: &serde_json::Error) -> ParseError {
    let (line, column) = (err.line(), err.column());
    let offset = if err.is_eof() {
        bytes.len()
    } else {
        let line_start: usize = bytes
            .split(|b| *b == b'\n')
            .take(line.saturating_sub(1))
            .map(|l| l.len() + 1)
            .sum();
        (line_start + column.saturating_sub(1)).min(bytes.len())
    };
    ParseError::Syntax {
        offset,
        line,
        column,
        message: err.to_string(),
    }
}

fn read_json(bytes: &[u8]) -> Result<Value, ParseError> {
    serde_json::from_slice(bytes).map_err(|e| syntax_error(bytes, &e))
}

fn from_value<T: serde::de::DeserializeOwned>(value: Value) -> Result<T, ParseError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let message = e.into_inner().to_string();
        ParseError::Field { path, message }
    })
}

/// Parse a scene file. Unknown top-level fields land in [`Scene::extensions`].
pub fn parse_scene(bytes: &[u8]) -> Result<Scene, ParseError> {
    let value = read_json(bytes)?;
    let Value::Object(mut object) = value else {
        return Err(ParseError::field(".", "scene must be a JSON object"));
    };
    let mut extensions: BTreeMap<String, Value> = object
        .iter()
        .filter(|(k, _)| !KNOWN_KEYS.contains(&k.as_str()))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    object.retain(|k, _| KNOWN_KEYS.contains(&k.as_str()));
    if let Some(bag) = object.remove("extensions") {
        let Value::Object(bag) = bag else {
            return Err(ParseError::field("extensions", "expected an object"));
        };
        extensions.extend(bag);
    }
    let mut scene: Scene = from_value(Value::Object(object))?;
    if scene.schema_version != SCHEMA_VERSION {
        return Err(ParseError::field(
            "schema_version",
            format!(
                "unsupported schema version {:?}, expected {SCHEMA_VERSION:?}",
                scene.schema_version
            ),
        ));
    }
    scene.extensions = extensions;
    Ok(scene)
}

fn sorted(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let entries: BTreeMap<String, Value> =
                map.into_iter().map(|(k, v)| (k, sorted(v))).collect();
            Value::Object(entries.into_iter().collect::<Map<_, _>>())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sorted).collect()),
        other => other,
    }
}

/// Canonical scene JSON: sorted keys, two-space indent, LF line endings,
/// trailing newline. Extensions are written back at top level.
pub fn serialize_scene(scene: &Scene) -> Vec<u8> {
    let mut value =
        serde_json::to_value(scene).expect("scene values are always representable in JSON");
    if let Value::Object(map) = &mut value {
        for (k, v) in &scene.extensions {
            if KNOWN_KEYS.contains(&k.as_str()) {
                continue;
            }
            map.insert(k.clone(), v.clone());
        }
    }
    let mut out =
        serde_json::to_vec_pretty(&sorted(value)).expect("serializing a JSON value cannot fail");
    out.push(b'\n');
    out
}

/// Drop `//` line comments outside of string literals.
fn strip_line_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    let mut in_string = false;
    let mut escaped = false;
    while let Some(c) = chars.next() {
        if in_string {
            out.push(c);
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        match c {
            '"' => {
                in_string = true;
                out.push(c);
            }
            '/' if chars.peek() == Some(&'/') => {
                for skipped in chars.by_ref() {
                    if skipped == '\n' {
                        out.push('\n');
                        break;
                    }
                }
            }
            _ => out.push(c),
        }
    }
    out
}

fn numbered_key(key: &str, prefix: &str, suffix: &str) -> Option<u64> {
    key.strip_prefix(prefix)?.strip_suffix(suffix)?.parse().ok()
}

fn legacy_number(entry: &Map<String, Value>, field: &str, path: &str) -> Result<f64, ParseError> {
    let path = format!("{path}.{field}");
    match entry.get(field) {
        Some(Value::String(s)) => parse_finite(s)
            .ok_or_else(|| ParseError::field(&path, format!("{s:?} is not a finite number"))),
        Some(Value::Number(n)) => n
            .as_f64()
            .filter(|v| v.is_finite())
            .ok_or_else(|| ParseError::field(&path, "number out of range")),
        Some(other) => Err(ParseError::field(
            &path,
            format!("expected a numeric string, found {other}"),
        )),
        None => Err(ParseError::field(&path, "missing field")),
    }
}

fn legacy_string(
    entry: &Map<String, Value>,
    field: &str,
    path: &str,
) -> Result<Option<String>, ParseError> {
    match entry.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(other) => Err(ParseError::field(
            format!("{path}.{field}"),
            format!("expected a string, found {other}"),
        )),
    }
}

/// Import the legacy pin configuration: `episode-N-data` objects holding
/// `content-N` entries.
///
/// Each entry becomes one document and one pin. `lock: true` deactivates
/// the pin. Episodes become conditional theme groups: every document of an
/// episode requires all documents of the previous non-empty episode.
/// `//` line comments and a missing outer object are tolerated.
pub fn import_legacy_episode(bytes: &[u8]) -> Result<Scene, ParseError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ParseError::Syntax {
        offset: e.valid_up_to(),
        line: 0,
        column: 0,
        message: format!("invalid UTF-8: {e}"),
    })?;
    let mut cleaned = strip_line_comments(text);
    if !cleaned.trim_start().starts_with('{') {
        cleaned = format!("{{{cleaned}}}");
    }
    let Value::Object(root) = read_json(cleaned.as_bytes())? else {
        return Err(ParseError::field(".", "expected an object of episodes"));
    };

    let mut episodes: Vec<(u64, &String, &Value)> = root
        .iter()
        .filter_map(|(k, v)| numbered_key(k, "episode-", "-data").map(|n| (n, k, v)))
        .collect();
    episodes.sort_by_key(|(n, _, _)| *n);

    let mut scene = Scene::new("legacy-import", "Imported episodes");
    scene.crs_note =
        "legacy episode import: coordinates are projected scene coordinates, source CRS not declared".into();
    scene.guidance.mode = GuidanceMode::Conditional;

    let mut previous_episode: Vec<String> = Vec::new();
    for (_, episode_key, episode) in episodes {
        let Value::Object(contents) = episode else {
            return Err(ParseError::field(
                episode_key.as_str(),
                "expected an object of contents",
            ));
        };
        let mut entries: Vec<(u64, &String, &Value)> = contents
            .iter()
            .filter_map(|(k, v)| numbered_key(k, "content-", "").map(|n| (n, k, v)))
            .collect();
        entries.sort_by_key(|(n, _, _)| *n);

        let episode_tag = episode_key.trim_end_matches("-data").to_string();
        let mut this_episode = Vec::new();
        for (_, content_key, entry) in entries {
            let path = format!("{episode_key}.{content_key}");
            let Value::Object(entry) = entry else {
                return Err(ParseError::field(path, "expected an object"));
            };
            let doc_id = format!("{episode_tag}.{content_key}");

            let src = legacy_string(entry, "src", &path)?
                .filter(|s| !s.is_empty())
                .ok_or_else(|| ParseError::field(format!("{path}.src"), "missing field"))?;
            let Some(Value::Object(position)) = entry.get("position") else {
                return Err(ParseError::field(
                    format!("{path}.position"),
                    "missing or not an object",
                ));
            };
            let pos_path = format!("{path}.position");
            let anchor = Vec3::new(
                legacy_number(position, "x", &pos_path)?,
                legacy_number(position, "y", &pos_path)?,
                legacy_number(position, "z", &pos_path)?,
            );
            let locked = match entry.get("lock") {
                None | Some(Value::Null) => false,
                Some(Value::Bool(b)) => *b,
                Some(other) => {
                    return Err(ParseError::field(
                        format!("{path}.lock"),
                        format!("expected a boolean, found {other}"),
                    ))
                }
            };
            let img_unlock = legacy_string(entry, "imgUnlock", &path)?.filter(|s| !s.is_empty());
            let img_lock = legacy_string(entry, "imgLock", &path)?.filter(|s| !s.is_empty());
            let image_source = img_unlock.or_else(|| img_lock.clone()).ok_or_else(|| {
                ParseError::field(format!("{path}.imgUnlock"), "missing thumbnail image")
            })?;
            let title = legacy_string(entry, "text", &path)?.unwrap_or_default();

            let mut doc = MultimediaDocument::new(&doc_id, MediaKind::infer_from_source(&src), src);
            doc.title = title;
            doc.tags.insert(episode_tag.clone());
            scene.documents.push(doc);

            scene.entities.pins.push(GeoPin {
                entity_id: format!("pin-{doc_id}"),
                document_id: doc_id.clone(),
                anchor,
                thumbnail: Thumbnail {
                    document_id: doc_id.clone(),
                    image_source,
                    locked_image_source: img_lock,
                },
                activated: !locked,
                panel_anchor: ScreenAnchor::Left,
            });

            if !previous_episode.is_empty() {
                scene
                    .guidance
                    .graph
                    .prerequisites
                    .insert(doc_id.clone(), previous_episode.iter().cloned().collect());
            }
            scene.guidance.graph.order.push(doc_id.clone());
            this_episode.push(doc_id);
        }
        if !this_episode.is_empty() {
            previous_episode = this_episode;
        }
    }
    Ok(scene)
}

/// One problem that prevents a scene from loading cleanly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneFinding {
    pub code: String,
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneReport {
    pub findings: Vec<SceneFinding>,
}

impl SceneReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    fn push(&mut self, code: &str, path: impl Into<String>, message: impl Into<String>) {
        self.findings.push(SceneFinding {
            code: code.into(),
            path: path.into(),
            message: message.into(),
        });
    }
}

fn check_doc_ref(report: &mut SceneReport, docs: &BTreeSet<&str>, path: String, id: &str) {
    if !docs.contains(id) {
        report.push(
            "dangling_reference",
            path,
            format!("unknown document {id:?}"),
        );
    }
}

fn check_finite(report: &mut SceneReport, path: String, v: Vec3) {
    if !v.is_finite() {
        report.push(
            "non_finite_geometry",
            path,
            format!("non-finite position {v:?}"),
        );
    }
}

/// Everything that would stop the scene from loading; empty when loadable.
pub fn validate_scene(scene: &Scene) -> SceneReport {
    let mut report = SceneReport::default();

    if scene.schema_version != SCHEMA_VERSION {
        report.push(
            "unsupported_schema_version",
            "schema_version",
            format!(
                "expected {SCHEMA_VERSION:?}, found {:?}",
                scene.schema_version
            ),
        );
    }
    if scene.scene_id.is_empty() {
        report.push("empty_id", "id", "scene id is empty");
    }
    if let Some(origin) = &scene.origin {
        if let Err(e) = origin.validate() {
            report.push("invalid_origin", "origin", e.to_string());
        }
    }

    let mut docs = BTreeSet::new();
    for (i, d) in scene.documents.iter().enumerate() {
        let path = format!("documents[{i}]");
        if d.id.is_empty() {
            report.push(
                "empty_document_id",
                format!("{path}.id"),
                "document id is empty",
            );
        } else if !docs.insert(d.id.as_str()) {
            report.push(
                "duplicate_document_id",
                format!("{path}.id"),
                format!("duplicate document id {:?}", d.id),
            );
        }
        if d.source.is_empty() {
            report.push(
                "empty_source",
                format!("{path}.source"),
                "document source is empty",
            );
        }
    }

    for (i, t) in scene.thumbnails.iter().enumerate() {
        let path = format!("thumbnails[{i}]");
        check_doc_ref(
            &mut report,
            &docs,
            format!("{path}.document_id"),
            &t.document_id,
        );
        if t.image_source.is_empty() {
            report.push(
                "empty_thumbnail_source",
                format!("{path}.image_source"),
                "thumbnail image is empty",
            );
        }
    }

    let mut entity_ids = BTreeSet::new();
    for id in scene.entities.entity_ids() {
        if id.is_empty() {
            report.push("empty_entity_id", "entities", "entity id is empty");
        } else if !entity_ids.insert(id) {
            report.push(
                "duplicate_entity_id",
                "entities",
                format!("duplicate entity id {id:?}"),
            );
        }
    }

    for (i, pin) in scene.entities.pins.iter().enumerate() {
        let path = format!("entities.pins[{i}]");
        check_doc_ref(
            &mut report,
            &docs,
            format!("{path}.document_id"),
            &pin.document_id,
        );
        check_finite(&mut report, format!("{path}.anchor"), pin.anchor);
        if pin.thumbnail.image_source.is_empty() {
            report.push(
                "empty_thumbnail_source",
                format!("{path}.thumbnail.image_source"),
                "thumbnail image is empty",
            );
        }
        if pin.thumbnail.document_id != pin.document_id {
            report.push(
                "thumbnail_mismatch",
                format!("{path}.thumbnail.document_id"),
                format!(
                    "thumbnail is for {:?}, pin links {:?}",
                    pin.thumbnail.document_id, pin.document_id
                ),
            );
        }
    }

    for (i, board) in scene.entities.web_boards.iter().enumerate() {
        let path = format!("entities.web_boards[{i}]");
        check_doc_ref(
            &mut report,
            &docs,
            format!("{path}.document_id"),
            &board.document_id,
        );
        check_finite(&mut report, format!("{path}.anchor"), board.anchor);
        if let Err(e) = board.size.validate() {
            report.push("invalid_size", format!("{path}.size"), e.to_string());
        }
    }

    for (i, ext) in scene.entities.extended_documents.iter().enumerate() {
        let path = format!("entities.extended_documents[{i}]");
        check_doc_ref(
            &mut report,
            &docs,
            format!("{path}.document_id"),
            &ext.document_id,
        );
        if let Err(e) = ext.camera.validate() {
            report.push(
                "non_finite_geometry",
                format!("{path}.camera"),
                e.to_string(),
            );
        }
        if !(0.0..=1.0).contains(&ext.overlay_opacity) {
            report.push(
                "opacity_out_of_range",
                format!("{path}.overlay_opacity"),
                format!("opacity {} outside [0, 1]", ext.overlay_opacity),
            );
        }
        if let Some(doc) = scene.document(&ext.document_id) {
            if !supports_overlay(doc.kind) {
                report.push(
                    "unsupported_media",
                    format!("{path}.document_id"),
                    format!("{} documents cannot be overlaid", doc.kind),
                );
            }
        }
    }

    for (i, show) in scene.entities.slideshows.iter().enumerate() {
        let path = format!("entities.slideshows[{i}]");
        check_finite(&mut report, format!("{path}.center"), show.center);
        if !show.heading_deg.is_finite() {
            report.push(
                "non_finite_geometry",
                format!("{path}.heading_deg"),
                "heading is not finite",
            );
        }
        if let Err(e) = show.size.validate() {
            report.push("invalid_size", format!("{path}.size"), e.to_string());
        }
        if show.media.is_empty() {
            report.push(
                "empty_slideshow",
                format!("{path}.media"),
                "slideshow has no media",
            );
        } else if show.current_index >= show.media.len() {
            report.push(
                "slideshow_index_out_of_range",
                format!("{path}.current_index"),
                format!(
                    "index {} with {} slides",
                    show.current_index,
                    show.media.len()
                ),
            );
        }
        for (j, id) in show.media.iter().enumerate() {
            check_doc_ref(&mut report, &docs, format!("{path}.media[{j}]"), id);
        }
    }

    for (i, layer) in scene.layer_refs.iter().enumerate() {
        if layer.base_url.is_empty() {
            report.push(
                "empty_layer_url",
                format!("layer_refs[{i}].base_url"),
                "layer base URL is empty",
            );
        }
    }

    for finding in validate_guidance_graph(scene).findings {
        let code = match &finding {
            crate::guidance::GuidanceFinding::Cycle { .. } => "guidance_cycle",
            crate::guidance::GuidanceFinding::Unreachable { .. } => "guidance_unreachable",
            crate::guidance::GuidanceFinding::DanglingReference { .. } => {
                "guidance_dangling_reference"
            }
            crate::guidance::GuidanceFinding::DuplicateInOrder { .. } => {
                "guidance_duplicate_in_order"
            }
            crate::guidance::GuidanceFinding::MissingFromOrder { .. } => {
                "guidance_missing_from_order"
            }
        };
        report.push(code, "guidance", finding.to_string());
    }

    report
}
