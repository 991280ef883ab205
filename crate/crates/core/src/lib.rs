//! Anchoring multimedia documents (images, videos, texts, web pages) in a
//! 3D urban scene and guiding users through them.
//!
//! * [`geo`]: local frame conversions, camera travel, billboard orientation
//! * [`document`]: typed documents and navigator filtering
//! * [`modalities`]: pins, web boards, extended documents, slideshows
//! * [`guidance`]: free, conditional and sequential access
//! * [`scene`]: scene files, validation and the legacy episode importer

pub mod document;
pub mod error;
pub mod geo;
pub mod guidance;
pub mod modalities;
mod numeric;
pub mod scene;

pub use document::{
    filter_documents, sort_by_reference_date, FilterCriteria, MediaKind, MultimediaDocument,
    Thumbnail,
};
pub use error::{Error, Result};
pub use geo::{
    billboard_rotation, enu_from_geodetic, geodetic_from_enu, interpolate_pose, travel_plan,
    CameraPose, Easing, GeodeticCoord, Quaternion, TravelConfig, TravelPlan, Vec3,
};
pub use guidance::{
    available_documents, new_session, progress, record_view, validate_guidance_graph,
    GuidanceCatalog, GuidanceFinding, GuidanceGraph, GuidanceMode, GuidanceReport, GuidanceState,
    GuidedScene,
};
pub use modalities::{
    apply_availability, build_view_plan, open_pin, set_overlay_opacity, slideshow_quad,
    slideshow_step, ExtendedDocumentEntity, GeoPin, GeoWebBoard, PanelOpenResult, PlaneOrientation,
    Quad, ScreenAnchor, Size2, Slideshow, ViewPlan,
};
pub use scene::{
    import_legacy_episode, parse_scene, serialize_scene, validate_scene, GeoserviceKind,
    GeoserviceLayer, ParseError, Scene, SceneReport,
};
