//! Access policies over a scene's documents.
//!
//! * free: every document is available at any time;
//! * conditional: a document unlocks once all of its prerequisites have
//!   been viewed;
//! * sequential: documents unlock one at a time following a fixed order.
//!
//! Viewing is binary: opening a document counts as viewing it. Viewed
//! documents always stay available, so a sequential tour can be revisited
//! but only advanced in order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuidanceMode {
    #[default]
    Free,
    Conditional,
    Sequential,
}

impl GuidanceMode {
    pub const ALL: [GuidanceMode; 3] = [
        GuidanceMode::Free,
        GuidanceMode::Conditional,
        GuidanceMode::Sequential,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GuidanceMode::Free => "free",
            GuidanceMode::Conditional => "conditional",
            GuidanceMode::Sequential => "sequential",
        }
    }
}

impl fmt::Display for GuidanceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Prerequisites for conditional access and the tour order for sequential access.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuidanceGraph {
    /// document -> documents that must all be viewed before it unlocks
    #[serde(default)]
    pub prerequisites: BTreeMap<String, BTreeSet<String>>,
    #[serde(default)]
    pub order: Vec<String>,
}

impl GuidanceGraph {
    pub fn prerequisites_of(&self, doc: &str) -> Option<&BTreeSet<String>> {
        self.prerequisites.get(doc)
    }
}

/// What the guidance layer needs to know about a scene.
pub trait GuidedScene {
    fn scene_id(&self) -> &str;
    fn document_ids(&self) -> BTreeSet<String>;
    fn guidance_graph(&self) -> &GuidanceGraph;
    fn default_mode(&self) -> GuidanceMode;

    fn has_document(&self, id: &str) -> bool {
        self.document_ids().contains(id)
    }
}

/// Minimal stand-alone [`GuidedScene`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuidanceCatalog {
    pub scene_id: String,
    pub documents: BTreeSet<String>,
    pub mode: GuidanceMode,
    pub graph: GuidanceGraph,
}

impl GuidedScene for GuidanceCatalog {
    fn scene_id(&self) -> &str {
        &self.scene_id
    }

    fn document_ids(&self) -> BTreeSet<String> {
        self.documents.clone()
    }

    fn guidance_graph(&self) -> &GuidanceGraph {
        &self.graph
    }

    fn default_mode(&self) -> GuidanceMode {
        self.mode
    }

    fn has_document(&self, id: &str) -> bool {
        self.documents.contains(id)
    }
}

/// One user's progress through a scene.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuidanceState {
    pub mode: GuidanceMode,
    pub viewed: BTreeSet<String>,
    pub scene_ref: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GuidanceFinding {
    Cycle { documents: Vec<String> },
    Unreachable { document_id: String },
    DanglingReference { from: String, missing: String },
    DuplicateInOrder { document_id: String },
    MissingFromOrder { document_id: String },
}

impl fmt::Display for GuidanceFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GuidanceFinding::Cycle { documents } => {
                write!(f, "prerequisite cycle among {}", documents.join(", "))
            }
            GuidanceFinding::Unreachable { document_id } => {
                write!(f, "document {document_id} can never be unlocked")
            }
            GuidanceFinding::DanglingReference { from, missing } => {
                write!(f, "{from} references unknown document {missing}")
            }
            GuidanceFinding::DuplicateInOrder { document_id } => {
                write!(
                    f,
                    "document {document_id} appears more than once in the tour order"
                )
            }
            GuidanceFinding::MissingFromOrder { document_id } => {
                write!(f, "document {document_id} is missing from the tour order")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuidanceReport {
    pub findings: Vec<GuidanceFinding>,
}

impl GuidanceReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Cycles, dangling references and documents never unlockable under the
/// prerequisite relation.
pub fn prerequisite_findings(scene: &impl GuidedScene) -> Vec<GuidanceFinding> {
    let docs = scene.document_ids();
    let graph = scene.guidance_graph();
    let mut findings = Vec::new();

    for (doc, reqs) in &graph.prerequisites {
        if !docs.contains(doc) {
            findings.push(GuidanceFinding::DanglingReference {
                from: "prerequisites".into(),
                missing: doc.clone(),
            });
        }
        for req in reqs {
            if !docs.contains(req) {
                findings.push(GuidanceFinding::DanglingReference {
                    from: doc.clone(),
                    missing: req.clone(),
                });
            }
        }
    }

    let mut g = DiGraph::<&str, ()>::new();
    let nodes: BTreeMap<&str, _> = docs
        .iter()
        .map(|d| (d.as_str(), g.add_node(d.as_str())))
        .collect();
    for (doc, reqs) in &graph.prerequisites {
        let Some(&to) = nodes.get(doc.as_str()) else {
            continue;
        };
        for req in reqs {
            if let Some(&from) = nodes.get(req.as_str()) {
                g.add_edge(from, to, ());
            }
        }
    }
    for component in tarjan_scc(&g) {
        let cyclic = component.len() > 1 || g.contains_edge(component[0], component[0]);
        if cyclic {
            let mut documents: Vec<String> = component.iter().map(|&n| g[n].to_string()).collect();
            documents.sort();
            findings.push(GuidanceFinding::Cycle { documents });
        }
    }

    let unlockable = unlock_closure(&docs, graph);
    for doc in docs.difference(&unlockable) {
        findings.push(GuidanceFinding::Unreachable {
            document_id: doc.clone(),
        });
    }
    findings
}

/// Fixpoint of "every prerequisite already unlocked" starting from nothing.
fn unlock_closure(docs: &BTreeSet<String>, graph: &GuidanceGraph) -> BTreeSet<String> {
    let mut unlocked = BTreeSet::new();
    loop {
        let before = unlocked.len();
        for doc in docs {
            if unlocked.contains(doc) {
                continue;
            }
            let ready = graph
                .prerequisites_of(doc)
                .is_none_or(|reqs| reqs.iter().all(|r| unlocked.contains(r)));
            if ready {
                unlocked.insert(doc.clone());
            }
        }
        if unlocked.len() == before {
            return unlocked;
        }
    }
}

/// Duplicates, unknown entries and omissions in the tour order.
pub fn order_findings(scene: &impl GuidedScene) -> Vec<GuidanceFinding> {
    let docs = scene.document_ids();
    let order = &scene.guidance_graph().order;
    let mut findings = Vec::new();
    let mut seen = BTreeSet::new();
    for doc in order {
        if !docs.contains(doc) {
            findings.push(GuidanceFinding::DanglingReference {
                from: "order".into(),
                missing: doc.clone(),
            });
        }
        if !seen.insert(doc.as_str()) {
            findings.push(GuidanceFinding::DuplicateInOrder {
                document_id: doc.clone(),
            });
        }
    }
    for doc in &docs {
        if !seen.contains(doc.as_str()) {
            findings.push(GuidanceFinding::MissingFromOrder {
                document_id: doc.clone(),
            });
        }
    }
    findings
}

/// Full report on a scene's guidance graph.
///
/// Prerequisites are always checked. The tour order is checked when it is
/// non-empty or when the scene defaults to sequential access.
pub fn validate_guidance_graph(scene: &impl GuidedScene) -> GuidanceReport {
    let graph = scene.guidance_graph();
    let mut findings = prerequisite_findings(scene);
    if !graph.order.is_empty() || scene.default_mode() == GuidanceMode::Sequential {
        findings.extend(order_findings(scene));
    }
    GuidanceReport { findings }
}

/// Start a session with nothing viewed.
pub fn new_session(scene: &impl GuidedScene, mode: GuidanceMode) -> Result<GuidanceState> {
    let problems = match mode {
        GuidanceMode::Free => Vec::new(),
        GuidanceMode::Conditional => prerequisite_findings(scene),
        GuidanceMode::Sequential => {
            if scene.guidance_graph().order.is_empty() {
                return Err(Error::MisconfiguredGuidance(format!(
                    "scene {} has no tour order for sequential access",
                    scene.scene_id()
                )));
            }
            order_findings(scene)
        }
    };
    if let Some(first) = problems.first() {
        return Err(Error::MisconfiguredGuidance(format!(
            "{mode} access on scene {}: {first}{}",
            scene.scene_id(),
            if problems.len() > 1 {
                format!(" (and {} more)", problems.len() - 1)
            } else {
                String::new()
            }
        )));
    }
    Ok(GuidanceState {
        mode,
        viewed: BTreeSet::new(),
        scene_ref: scene.scene_id().to_string(),
    })
}

pub fn available_documents(state: &GuidanceState, scene: &impl GuidedScene) -> BTreeSet<String> {
    let docs = scene.document_ids();
    let graph = scene.guidance_graph();
    match state.mode {
        GuidanceMode::Free => docs,
        GuidanceMode::Conditional => {
            let mut available: BTreeSet<String> = docs
                .into_iter()
                .filter(|d| {
                    graph
                        .prerequisites_of(d)
                        .is_none_or(|reqs| reqs.is_subset(&state.viewed))
                })
                .collect();
            available.extend(state.viewed.iter().cloned());
            available
        }
        GuidanceMode::Sequential => {
            let mut available = state.viewed.clone();
            if let Some(next) = graph.order.iter().find(|d| !state.viewed.contains(*d)) {
                available.insert(next.clone());
            }
            available
        }
    }
}

/// Mark `doc_id` as viewed. Re-viewing is a no-op.
pub fn record_view(
    state: &GuidanceState,
    doc_id: &str,
    scene: &impl GuidedScene,
) -> Result<GuidanceState> {
    if !scene.has_document(doc_id) {
        return Err(Error::DanglingReference {
            from: state.scene_ref.clone(),
            missing: doc_id.to_string(),
        });
    }
    if state.viewed.contains(doc_id) {
        return Ok(state.clone());
    }
    if !available_documents(state, scene).contains(doc_id) {
        return Err(Error::LockedContent {
            document_id: doc_id.to_string(),
        });
    }
    let mut next = state.clone();
    next.viewed.insert(doc_id.to_string());
    Ok(next)
}

/// Share of the documents governed by the mode that have been viewed.
/// A scene with nothing to view counts as complete.
pub fn progress(state: &GuidanceState, scene: &impl GuidedScene) -> f64 {
    let governed: BTreeSet<String> = match state.mode {
        GuidanceMode::Sequential => scene.guidance_graph().order.iter().cloned().collect(),
        _ => scene.document_ids(),
    };
    if governed.is_empty() {
        return 1.0;
    }
    state.viewed.intersection(&governed).count() as f64 / governed.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    fn catalog(docs: &[&str], prereqs: &[(&str, &[&str])], order: &[&str]) -> GuidanceCatalog {
        GuidanceCatalog {
            scene_id: "test".into(),
            documents: set(docs),
            mode: GuidanceMode::Conditional,
            graph: GuidanceGraph {
                prerequisites: prereqs
                    .iter()
                    .map(|(d, r)| (d.to_string(), set(r)))
                    .collect(),
                order: order.iter().map(|s| s.to_string()).collect(),
            },
        }
    }

    fn state(mode: GuidanceMode, viewed: &[&str]) -> GuidanceState {
        GuidanceState {
            mode,
            viewed: set(viewed),
            scene_ref: "test".into(),
        }
    }

    #[test]
    fn new_session_examples() {
        let scene = catalog(&["a", "b", "c"], &[], &[]);
        assert!(new_session(&scene, GuidanceMode::Free)
            .unwrap()
            .viewed
            .is_empty());
        assert!(matches!(
            new_session(&scene, GuidanceMode::Sequential),
            Err(Error::MisconfiguredGuidance(_))
        ));
        let themed = catalog(&["e1a", "e1b", "e2a"], &[("e2a", &["e1a", "e1b"])], &[]);
        let s = new_session(&themed, GuidanceMode::Conditional).unwrap();
        assert!(s.viewed.is_empty());
        assert_eq!(available_documents(&s, &themed), set(&["e1a", "e1b"]));
    }

    #[test]
    fn conditional_session_rejects_cycles() {
        let scene = catalog(&["a", "b"], &[("a", &["b"]), ("b", &["a"])], &[]);
        assert!(new_session(&scene, GuidanceMode::Conditional).is_err());
        assert!(new_session(&scene, GuidanceMode::Free).is_ok());
    }

    #[test]
    fn availability_examples() {
        let scene = catalog(&["A", "B", "C"], &[("C", &["A", "B"])], &["A", "B", "C"]);
        assert_eq!(
            available_documents(&state(GuidanceMode::Free, &[]), &scene),
            set(&["A", "B", "C"])
        );
        assert_eq!(
            available_documents(&state(GuidanceMode::Conditional, &["A"]), &scene),
            set(&["A", "B"])
        );
        assert_eq!(
            available_documents(&state(GuidanceMode::Conditional, &["A", "B"]), &scene),
            set(&["A", "B", "C"])
        );
        let seq = catalog(&["d1", "d2", "d3"], &[], &["d1", "d2", "d3"]);
        assert_eq!(
            available_documents(&state(GuidanceMode::Sequential, &[]), &seq),
            set(&["d1"])
        );
        assert_eq!(
            available_documents(&state(GuidanceMode::Sequential, &["d1", "d2", "d3"]), &seq),
            set(&["d1", "d2", "d3"])
        );
    }

    #[test]
    fn record_view_examples() {
        let seq = catalog(&["d1", "d2"], &[], &["d1", "d2"]);
        let s = new_session(&seq, GuidanceMode::Sequential).unwrap();
        assert_eq!(
            record_view(&s, "d2", &seq),
            Err(Error::LockedContent {
                document_id: "d2".into()
            })
        );

        let cond = catalog(&["A", "B", "C"], &[("C", &["A", "B"])], &[]);
        let mut s = new_session(&cond, GuidanceMode::Conditional).unwrap();
        for d in ["A", "B", "C"] {
            s = record_view(&s, d, &cond).unwrap();
        }
        assert_eq!(s.viewed, set(&["A", "B", "C"]));
        assert_eq!(record_view(&s, "A", &cond).unwrap(), s);

        assert!(matches!(
            record_view(&s, "nope", &cond),
            Err(Error::DanglingReference { .. })
        ));
    }

    #[test]
    fn sequential_allows_revisiting() {
        let seq = catalog(&["d1", "d2", "d3"], &[], &["d1", "d2", "d3"]);
        let s = new_session(&seq, GuidanceMode::Sequential).unwrap();
        let s = record_view(&s, "d1", &seq).unwrap();
        let s = record_view(&s, "d2", &seq).unwrap();
        assert_eq!(record_view(&s, "d1", &seq).unwrap(), s);
    }

    #[test]
    fn validation_examples() {
        let cyc = catalog(&["A", "B"], &[("A", &["B"]), ("B", &["A"])], &[]);
        let report = validate_guidance_graph(&cyc);
        assert!(report.findings.contains(&GuidanceFinding::Cycle {
            documents: vec!["A".into(), "B".into()]
        }));
        assert!(report.findings.contains(&GuidanceFinding::Unreachable {
            document_id: "A".into()
        }));
        assert!(report.findings.contains(&GuidanceFinding::Unreachable {
            document_id: "B".into()
        }));

        let chain = catalog(&["A", "B", "C"], &[("B", &["A"]), ("C", &["B"])], &[]);
        assert!(validate_guidance_graph(&chain).is_empty());

        let dangling = catalog(&["D"], &[("D", &["X"])], &[]);
        let report = validate_guidance_graph(&dangling);
        assert!(report
            .findings
            .contains(&GuidanceFinding::DanglingReference {
                from: "D".into(),
                missing: "X".into()
            }));

        let selfloop = catalog(&["A"], &[("A", &["A"])], &[]);
        assert!(matches!(
            validate_guidance_graph(&selfloop).findings[0],
            GuidanceFinding::Cycle { .. }
        ));
    }

    #[test]
    fn order_validation() {
        let mut scene = catalog(&["a", "b", "c"], &[], &["a", "a", "x"]);
        let report = validate_guidance_graph(&scene);
        assert!(report
            .findings
            .contains(&GuidanceFinding::DuplicateInOrder {
                document_id: "a".into()
            }));
        assert!(report
            .findings
            .contains(&GuidanceFinding::MissingFromOrder {
                document_id: "b".into()
            }));
        assert!(report
            .findings
            .contains(&GuidanceFinding::DanglingReference {
                from: "order".into(),
                missing: "x".into()
            }));
        assert!(new_session(&scene, GuidanceMode::Sequential).is_err());

        scene.graph.order.clear();
        assert!(validate_guidance_graph(&scene).is_empty());
        scene.mode = GuidanceMode::Sequential;
        assert!(!validate_guidance_graph(&scene).is_empty());
    }

    #[test]
    fn progress_examples() {
        let scene = catalog(&["a", "b", "c", "d"], &[], &[]);
        assert_eq!(progress(&state(GuidanceMode::Free, &[]), &scene), 0.0);
        assert_eq!(
            progress(&state(GuidanceMode::Free, &["a", "b"]), &scene),
            0.5
        );
        assert_eq!(
            progress(&state(GuidanceMode::Free, &["a", "b", "c", "d"]), &scene),
            1.0
        );
        let empty = catalog(&[], &[], &[]);
        assert_eq!(
            progress(&state(GuidanceMode::Conditional, &[]), &empty),
            1.0
        );
    }
}
