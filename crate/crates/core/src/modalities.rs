//! The four ways of placing a document in the scene: geo-pinned
//! multimedia, geo-web boards, extended documents and slideshows.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::document::{MediaKind, MultimediaDocument, Thumbnail};
use crate::error::{Error, Result};
use crate::geo::{travel_plan, CameraPose, TravelConfig, TravelPlan, Vec3};

/// Where an opened pin document docks on screen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScreenAnchor {
    #[default]
    Left,
    Right,
    Bottom,
    Center,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Size2 {
    pub width_m: f64,
    pub height_m: f64,
}

impl Size2 {
    pub fn new(width_m: f64, height_m: f64) -> Self {
        Self { width_m, height_m }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.width_m) && ok(self.height_m) {
            Ok(())
        } else {
            Err(Error::InvalidSize {
                width_m: self.width_m,
                height_m: self.height_m,
            })
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_opacity() -> f64 {
    1.0
}

/// Interactive marker with a thumbnail. Drawn at constant screen size;
/// stays visible while deactivated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoPin {
    pub entity_id: String,
    pub document_id: String,
    pub anchor: Vec3,
    pub thumbnail: Thumbnail,
    #[serde(default = "default_true")]
    pub activated: bool,
    #[serde(default)]
    pub panel_anchor: ScreenAnchor,
}

/// Document rendered in-world at an anchor, camera-facing, sized in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoWebBoard {
    pub entity_id: String,
    pub document_id: String,
    pub anchor: Vec3,
    pub size: Size2,
}

/// Document overlaid on the 3D view from a fixed camera pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedDocumentEntity {
    pub entity_id: String,
    pub document_id: String,
    pub camera: CameraPose,
    #[serde(default = "default_opacity")]
    pub overlay_opacity: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaneOrientation {
    #[default]
    Horizontal,
    Vertical,
}

/// Ordered media projected on a fixed plane.
///
/// `heading_deg` rotates the plane counterclockwise about the up axis as
/// seen from above. At heading 0 a vertical plane faces north (`+y`) and a
/// horizontal plane has its width along east.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slideshow {
    pub entity_id: String,
    pub center: Vec3,
    pub size: Size2,
    #[serde(default)]
    pub orientation: PlaneOrientation,
    #[serde(default)]
    pub heading_deg: f64,
    pub media: Vec<String>,
    #[serde(default)]
    pub current_index: usize,
}

impl Slideshow {
    pub fn current_document(&self) -> Option<&str> {
        self.media.get(self.current_index).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelOpenResult {
    pub document_id: String,
    pub panel_anchor: ScreenAnchor,
}

/// Corners in counterclockwise order seen from the front (normal side):
/// bottom-left, bottom-right, top-right, top-left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quad {
    pub corners: [Vec3; 4],
    pub normal: Vec3,
}

impl Quad {
    pub fn centroid(&self) -> Vec3 {
        self.corners.iter().fold(Vec3::ZERO, |acc, c| acc + *c) * 0.25
    }
}

/// Camera travel plus overlay for engaging an extended document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewPlan {
    pub travel: TravelPlan,
    pub overlay_document_id: String,
    pub overlay_opacity: f64,
}

/// Set each pin's activation from document availability. Locked pins are kept.
pub fn apply_availability(pins: &[GeoPin], available: &BTreeSet<String>) -> Vec<GeoPin> {
    pins.iter()
        .map(|pin| GeoPin {
            activated: available.contains(&pin.document_id),
            ..pin.clone()
        })
        .collect()
}

/// Open the 2D panel of a pin. The 3D camera does not move.
pub fn open_pin(pin: &GeoPin, documents: &[MultimediaDocument]) -> Result<PanelOpenResult> {
    if !documents.iter().any(|d| d.id == pin.document_id) {
        return Err(Error::DanglingReference {
            from: pin.entity_id.clone(),
            missing: pin.document_id.clone(),
        });
    }
    if !pin.activated {
        return Err(Error::LockedContent {
            document_id: pin.document_id.clone(),
        });
    }
    Ok(PanelOpenResult {
        document_id: pin.document_id.clone(),
        panel_anchor: pin.panel_anchor,
    })
}

/// World-space plane of a slideshow, with `+z` as world up.
pub fn slideshow_quad(s: &Slideshow) -> Result<Quad> {
    s.size.validate()?;
    if !s.center.is_finite() || !s.heading_deg.is_finite() {
        return Err(Error::InvalidCoordinate(format!(
            "slideshow {} has non-finite placement",
            s.entity_id
        )));
    }
    let (sin_h, cos_h) = s.heading_deg.to_radians().sin_cos();
    // Heading 0: width along east, depth along north.
    let heading_dir = Vec3::new(-sin_h, cos_h, 0.0);
    let (width_axis, height_axis, normal) = match s.orientation {
        PlaneOrientation::Horizontal => (heading_dir.cross(Vec3::Z), heading_dir, Vec3::Z),
        PlaneOrientation::Vertical => (Vec3::Z.cross(heading_dir), Vec3::Z, heading_dir),
    };
    let u = width_axis * (0.5 * s.size.width_m);
    let v = height_axis * (0.5 * s.size.height_m);
    let c = s.center;
    Ok(Quad {
        corners: [c - u - v, c + u - v, c + u + v, c - u + v],
        normal,
    })
}

/// Move `delta` slides forward (negative goes back), wrapping around.
pub fn slideshow_step(s: &Slideshow, delta: i64) -> Result<Slideshow> {
    if s.media.is_empty() {
        return Err(Error::EmptySlideshow(s.entity_id.clone()));
    }
    let len = s.media.len() as i128;
    let index = (s.current_index as i128 + delta as i128).rem_euclid(len) as usize;
    Ok(Slideshow {
        current_index: index,
        ..s.clone()
    })
}

/// Media kinds an extended document can overlay on the 3D view.
pub fn supports_overlay(kind: MediaKind) -> bool {
    matches!(
        kind,
        MediaKind::Image | MediaKind::AnimatedImage | MediaKind::Video
    )
}

pub fn build_view_plan(
    entity: &ExtendedDocumentEntity,
    document: &MultimediaDocument,
    current: &CameraPose,
    travel: &TravelConfig,
) -> Result<ViewPlan> {
    if document.id != entity.document_id {
        return Err(Error::DanglingReference {
            from: entity.entity_id.clone(),
            missing: entity.document_id.clone(),
        });
    }
    if !supports_overlay(document.kind) {
        return Err(Error::UnsupportedMedia {
            document_id: document.id.clone(),
            kind: document.kind,
        });
    }
    Ok(ViewPlan {
        travel: travel_plan(current, &entity.camera, travel)?,
        overlay_document_id: entity.document_id.clone(),
        overlay_opacity: entity.overlay_opacity.clamp(0.0, 1.0),
    })
}

pub fn set_overlay_opacity(
    e: &ExtendedDocumentEntity,
    alpha: f64,
) -> Result<ExtendedDocumentEntity> {
    if !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "opacity {alpha} is not finite"
        )));
    }
    Ok(ExtendedDocumentEntity {
        overlay_opacity: alpha.clamp(0.0, 1.0),
        ..e.clone()
    })
}

impl ExtendedDocumentEntity {
    pub fn new(
        entity_id: impl Into<String>,
        document_id: impl Into<String>,
        camera: CameraPose,
    ) -> Self {
        Self {
            entity_id: entity_id.into(),
            document_id: document_id.into(),
            camera,
            overlay_opacity: 1.0,
        }
    }
}

impl GeoPin {
    pub fn new(
        entity_id: impl Into<String>,
        document_id: impl Into<String>,
        anchor: Vec3,
        image: impl Into<String>,
    ) -> Self {
        let document_id = document_id.into();
        Self {
            entity_id: entity_id.into(),
            thumbnail: Thumbnail {
                document_id: document_id.clone(),
                image_source: image.into(),
                locked_image_source: None,
            },
            document_id,
            anchor,
            activated: true,
            panel_anchor: ScreenAnchor::Left,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::Quaternion;
    use proptest::prelude::*;

    fn pins(ids: &[&str]) -> Vec<GeoPin> {
        ids.iter()
            .map(|id| GeoPin::new(format!("pin-{id}"), *id, Vec3::ZERO, "thumb.jpg"))
            .collect()
    }

    fn slideshow(
        orientation: PlaneOrientation,
        heading_deg: f64,
        w: f64,
        h: f64,
        center: Vec3,
    ) -> Slideshow {
        Slideshow {
            entity_id: "s".into(),
            center,
            size: Size2::new(w, h),
            orientation,
            heading_deg,
            media: vec!["a".into(), "b".into(), "c".into()],
            current_index: 0,
        }
    }

    fn assert_close(a: Vec3, b: Vec3) {
        assert!((a - b).norm() < 1e-9, "{a:?} != {b:?}");
    }

    #[test]
    fn availability_examples() {
        let all: BTreeSet<String> = ["A", "B", "C"].map(String::from).into();
        assert!(apply_availability(&pins(&["A", "B", "C"]), &all)
            .iter()
            .all(|p| p.activated));

        let none = apply_availability(&pins(&["A", "B", "C"]), &BTreeSet::new());
        assert_eq!(none.len(), 3);
        assert!(none.iter().all(|p| !p.activated));

        let some: BTreeSet<String> = ["A", "C"].map(String::from).into();
        let out = apply_availability(&pins(&["A", "B", "C"]), &some);
        let flags: Vec<_> = out.iter().map(|p| p.activated).collect();
        assert_eq!(flags, [true, false, true]);
    }

    #[test]
    fn open_pin_cases() {
        let docs = vec![MultimediaDocument::new("A", MediaKind::Image, "a.jpg")];
        let pin = pins(&["A"]).remove(0);
        assert_eq!(
            open_pin(&pin, &docs).unwrap(),
            PanelOpenResult {
                document_id: "A".into(),
                panel_anchor: ScreenAnchor::Left
            }
        );
        let locked = GeoPin {
            activated: false,
            ..pin.clone()
        };
        assert_eq!(
            open_pin(&locked, &docs),
            Err(Error::LockedContent {
                document_id: "A".into()
            })
        );
        let dangling = pins(&["missing"]).remove(0);
        assert!(matches!(
            open_pin(&dangling, &docs),
            Err(Error::DanglingReference { .. })
        ));
    }

    #[test]
    fn horizontal_quad_hand_built() {
        let q = slideshow_quad(&slideshow(
            PlaneOrientation::Horizontal,
            0.0,
            10.0,
            10.0,
            Vec3::ZERO,
        ))
        .unwrap();
        assert_close(q.corners[0], Vec3::new(-5.0, -5.0, 0.0));
        assert_close(q.corners[1], Vec3::new(5.0, -5.0, 0.0));
        assert_close(q.corners[2], Vec3::new(5.0, 5.0, 0.0));
        assert_close(q.corners[3], Vec3::new(-5.0, 5.0, 0.0));
        assert_eq!(q.normal, Vec3::Z);
    }

    #[test]
    fn vertical_quad_hand_built() {
        let q = slideshow_quad(&slideshow(
            PlaneOrientation::Vertical,
            0.0,
            4.0,
            2.0,
            Vec3::new(0.0, 0.0, 5.0),
        ))
        .unwrap();
        let mut got: Vec<_> = q
            .corners
            .iter()
            .map(|c| (c.x.round() as i64, c.y.round() as i64, c.z.round() as i64))
            .collect();
        got.sort();
        assert_eq!(got, [(-2, 0, 4), (-2, 0, 6), (2, 0, 4), (2, 0, 6)]);
        for c in q.corners {
            assert!(c.y.abs() < 1e-12);
        }
        assert_close(q.normal, Vec3::Y);
        // counterclockwise seen from the front
        let e1 = q.corners[1] - q.corners[0];
        let e2 = q.corners[2] - q.corners[1];
        assert!(e1.cross(e2).dot(q.normal) > 0.0);
    }

    #[test]
    fn heading_rotates_vertical_normal_counterclockwise() {
        let q = slideshow_quad(&slideshow(
            PlaneOrientation::Vertical,
            90.0,
            4.0,
            2.0,
            Vec3::ZERO,
        ))
        .unwrap();
        assert_close(q.normal, Vec3::new(-1.0, 0.0, 0.0));
    }

    #[test]
    fn bad_size_rejected() {
        let s = slideshow(PlaneOrientation::Horizontal, 0.0, -1.0, 2.0, Vec3::ZERO);
        assert!(matches!(slideshow_quad(&s), Err(Error::InvalidSize { .. })));
    }

    #[test]
    fn step_examples() {
        let mut s = slideshow(PlaneOrientation::Horizontal, 0.0, 1.0, 1.0, Vec3::ZERO);
        s.current_index = 2;
        assert_eq!(slideshow_step(&s, 1).unwrap().current_index, 0);
        assert_eq!(slideshow_step(&s, 0).unwrap(), s);
        assert_eq!(slideshow_step(&s, -5).unwrap().current_index, 0);
        let single = Slideshow {
            media: vec!["only".into()],
            current_index: 0,
            ..s.clone()
        };
        for d in [-7, 0, 1, 99] {
            assert_eq!(slideshow_step(&single, d).unwrap().current_index, 0);
        }
        let empty = Slideshow {
            media: vec![],
            current_index: 0,
            ..s
        };
        assert!(matches!(
            slideshow_step(&empty, 1),
            Err(Error::EmptySlideshow(_))
        ));
    }

    #[test]
    fn view_plan_cases() {
        let target = CameraPose::new(Vec3::new(0.0, -200.0, 80.0), Quaternion::IDENTITY);
        let entity = ExtendedDocumentEntity::new("ext", "photo", target);
        let doc = MultimediaDocument::new("photo", MediaKind::Image, "p.jpg");
        let cfg = TravelConfig::default();

        let plan = build_view_plan(&entity, &doc, &target, &cfg).unwrap();
        assert_eq!(plan.travel.duration_s, cfg.min_duration_s);
        assert_eq!(plan.travel.sample(0.5).unwrap(), target);
        assert_eq!(plan.overlay_opacity, 1.0);
        assert_eq!(plan.overlay_document_id, "photo");

        let page = MultimediaDocument::new("photo", MediaKind::WebPage, "https://example.org");
        assert!(matches!(
            build_view_plan(&entity, &page, &target, &cfg),
            Err(Error::UnsupportedMedia { .. })
        ));
    }

    #[test]
    fn opacity_clamps() {
        let e = ExtendedDocumentEntity::new("e", "d", CameraPose::default());
        assert_eq!(set_overlay_opacity(&e, 0.5).unwrap().overlay_opacity, 0.5);
        assert_eq!(set_overlay_opacity(&e, 1.7).unwrap().overlay_opacity, 1.0);
        assert_eq!(set_overlay_opacity(&e, -3.0).unwrap().overlay_opacity, 0.0);
        assert!(set_overlay_opacity(&e, f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn quad_geometry(
            cx in -1e4f64..1e4, cy in -1e4f64..1e4, cz in -100f64..500.0,
            w in 0.1f64..500.0, h in 0.1f64..500.0,
            heading in -720f64..720.0,
            vertical in any::<bool>(),
            shift in (-1e3f64..1e3, -1e3f64..1e3, -1e3f64..1e3),
        ) {
            let orientation = if vertical { PlaneOrientation::Vertical } else { PlaneOrientation::Horizontal };
            let s = slideshow(orientation, heading, w, h, Vec3::new(cx, cy, cz));
            let q = slideshow_quad(&s).unwrap();
            prop_assert!((q.centroid() - s.center).norm() < 1e-9);
            let c = q.corners;
            prop_assert!(((c[1] - c[0]).norm() - w).abs() < 1e-9);
            prop_assert!(((c[2] - c[1]).norm() - h).abs() < 1e-9);
            prop_assert!(((c[3] - c[2]).norm() - w).abs() < 1e-9);
            prop_assert!(((c[0] - c[3]).norm() - h).abs() < 1e-9);
            for corner in c {
                prop_assert!((corner - s.center).dot(q.normal).abs() < 1e-9);
            }
            if vertical {
                prop_assert!(q.normal.z.abs() < 1e-12);
            } else {
                prop_assert_eq!(q.normal, Vec3::Z);
                prop_assert!(c.iter().all(|p| p.z == cz));
            }
            let t = Vec3::new(shift.0, shift.1, shift.2);
            let moved = slideshow_quad(&Slideshow { center: s.center + t, ..s.clone() }).unwrap();
            for (a, b) in moved.corners.iter().zip(c.iter()) {
                prop_assert!((*a - (*b + t)).norm() < 1e-6);
            }
        }

        #[test]
        fn step_composes(len in 1usize..10, start in 0usize..10, a in -50i64..50, b in -50i64..50) {
            let mut s = slideshow(PlaneOrientation::Horizontal, 0.0, 1.0, 1.0, Vec3::ZERO);
            s.media = (0..len).map(|i| i.to_string()).collect();
            s.current_index = start % len;
            let twice = slideshow_step(&slideshow_step(&s, a).unwrap(), b).unwrap();
            prop_assert_eq!(&twice, &slideshow_step(&s, a + b).unwrap());
            prop_assert_eq!(&slideshow_step(&s, len as i64).unwrap(), &s);
        }

        #[test]
        fn availability_preserves_order(flags in prop::collection::vec(any::<bool>(), 0..12)) {
            let ids: Vec<String> = (0..flags.len()).map(|i| format!("d{i}")).collect();
            let ps: Vec<GeoPin> = ids.iter().map(|id| GeoPin::new(format!("p-{id}"), id.clone(), Vec3::ZERO, "t")).collect();
            let available: BTreeSet<String> = ids.iter().zip(&flags).filter(|(_, f)| **f).map(|(id, _)| id.clone()).collect();
            let out = apply_availability(&ps, &available);
            prop_assert_eq!(out.len(), ps.len());
            for ((o, p), f) in out.iter().zip(&ps).zip(&flags) {
                prop_assert_eq!(&o.entity_id, &p.entity_id);
                prop_assert_eq!(o.activated, *f);
            }
        }
    }
}
