//! OGC WMS 1.3.0 GetMap request URLs for scene layers.

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use geodoc_core::{GeoserviceKind, GeoserviceLayer};

/// Everything except RFC 3986 unreserved characters.
const QUERY_VALUE: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'.')
    .remove(b'_')
    .remove(b'~');

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BBox {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Self {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WmsError {
    #[error("invalid bbox {0:?}: min must be below max on both axes")]
    InvalidBBox(BBox),
    #[error("image size {width}x{height} must be positive")]
    InvalidImageSize { width: u32, height: u32 },
    #[error("layer {0} is not a WMS layer")]
    NotWms(String),
    #[error("layer {0} has an empty base URL")]
    EmptyBaseUrl(String),
}

fn encode(value: &str) -> String {
    utf8_percent_encode(value, QUERY_VALUE).to_string()
}

/// GetMap URL with parameters in a fixed order.
///
/// `BBOX` is written as given (`minx,miny,maxx,maxy`); for geographic CRSs
/// with latitude-first axis order the caller supplies the bbox in that order.
pub fn build_wms_map_url(
    layer: &GeoserviceLayer,
    bbox: &BBox,
    width_px: u32,
    height_px: u32,
    crs_code: &str,
) -> Result<String, WmsError> {
    if layer.kind != GeoserviceKind::Wms {
        return Err(WmsError::NotWms(layer.layer_name.clone()));
    }
    if layer.base_url.is_empty() {
        return Err(WmsError::EmptyBaseUrl(layer.layer_name.clone()));
    }
    let ordered = bbox.min_x < bbox.max_x && bbox.min_y < bbox.max_y;
    let finite = [bbox.min_x, bbox.min_y, bbox.max_x, bbox.max_y]
        .iter()
        .all(|v| v.is_finite());
    if !(ordered && finite) {
        return Err(WmsError::InvalidBBox(*bbox));
    }
    if width_px == 0 || height_px == 0 {
        return Err(WmsError::InvalidImageSize {
            width: width_px,
            height: height_px,
        });
    }

    let bbox_value = [bbox.min_x, bbox.min_y, bbox.max_x, bbox.max_y]
        .iter()
        .map(|v| encode(&v.to_string()))
        .collect::<Vec<_>>()
        .join(",");
    let params = [
        ("SERVICE", "WMS".to_string()),
        ("VERSION", "1.3.0".to_string()),
        ("REQUEST", "GetMap".to_string()),
        ("LAYERS", encode(&layer.layer_name)),
        (
            "STYLES",
            encode(layer.default_style.as_deref().unwrap_or("")),
        ),
        ("CRS", encode(crs_code)),
        ("BBOX", bbox_value),
        ("WIDTH", width_px.to_string()),
        ("HEIGHT", height_px.to_string()),
        ("FORMAT", encode("image/png")),
    ];
    let query = params
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join("&");

    let base = &layer.base_url;
    let separator = match base.find('?') {
        None => "?",
        Some(_) if base.ends_with('?') || base.ends_with('&') => "",
        Some(_) => "&",
    };
    Ok(format!("{base}{separator}{query}"))
}
