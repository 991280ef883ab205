use thiserror::Error;

use crate::document::MediaKind;

/// Errors raised by the scene engine operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid coordinate: {0}")]
    InvalidCoordinate(String),

    #[error("degenerate view: anchor and camera coincide")]
    DegenerateView,

    #[error("parameter out of range: {name} = {value}")]
    ParameterRange { name: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid camera pose: {0}")]
    InvalidPose(String),

    #[error("invalid range: start {start} is after end {end}")]
    InvalidRange { start: String, end: String },

    #[error("invalid size: {width_m} x {height_m} m")]
    InvalidSize { width_m: f64, height_m: f64 },

    #[error("slideshow {0} has no media")]
    EmptySlideshow(String),

    #[error("document {document_id} is locked")]
    LockedContent { document_id: String },

    #[error("{from} references unknown document {missing}")]
    DanglingReference { from: String, missing: String },

    #[error("document {document_id} of kind {kind} cannot be shown as an extended document")]
    UnsupportedMedia {
        document_id: String,
        kind: MediaKind,
    },

    #[error("misconfigured guidance: {0}")]
    MisconfiguredGuidance(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
