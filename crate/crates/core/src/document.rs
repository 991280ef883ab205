//! Multimedia documents and their metadata, independent of placement.

use std::collections::BTreeSet;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediaKind {
    Image,
    AnimatedImage,
    Video,
    #[serde(rename = "video_360")]
    Video360,
    Text,
    Pdf,
    WebPage,
}

impl MediaKind {
    pub const ALL: [MediaKind; 7] = [
        MediaKind::Image,
        MediaKind::AnimatedImage,
        MediaKind::Video,
        MediaKind::Video360,
        MediaKind::Text,
        MediaKind::Pdf,
        MediaKind::WebPage,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MediaKind::Image => "image",
            MediaKind::AnimatedImage => "animated_image",
            MediaKind::Video => "video",
            MediaKind::Video360 => "video_360",
            MediaKind::Text => "text",
            MediaKind::Pdf => "pdf",
            MediaKind::WebPage => "web_page",
        }
    }

    pub fn is_video(self) -> bool {
        matches!(self, MediaKind::Video | MediaKind::Video360)
    }

    /// Guess the kind from a source path or URL extension, falling back to a web page.
    pub fn infer_from_source(source: &str) -> MediaKind {
        let path = source
            .split(['?', '#'])
            .next()
            .unwrap_or_default()
            .to_ascii_lowercase();
        let file = path.rsplit('/').next().unwrap_or_default();
        let ext = match file.rsplit_once('.') {
            Some((stem, ext)) if !stem.is_empty() => ext,
            _ => return MediaKind::WebPage,
        };
        match ext {
            "jpg" | "jpeg" | "png" | "webp" | "bmp" | "tif" | "tiff" | "svg" => MediaKind::Image,
            "gif" | "apng" => MediaKind::AnimatedImage,
            "mp4" | "webm" | "ogv" | "mov" | "m4v" | "mkv" => MediaKind::Video,
            "txt" | "md" => MediaKind::Text,
            "pdf" => MediaKind::Pdf,
            _ => MediaKind::WebPage,
        }
    }

    /// Media type used when serving content of this kind with an unknown extension.
    pub fn default_media_type(self) -> &'static str {
        match self {
            MediaKind::Image => "image/jpeg",
            MediaKind::AnimatedImage => "image/gif",
            MediaKind::Video | MediaKind::Video360 => "video/mp4",
            MediaKind::Text => "text/plain; charset=utf-8",
            MediaKind::Pdf => "application/pdf",
            MediaKind::WebPage => "text/html; charset=utf-8",
        }
    }
}

impl fmt::Display for MediaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultimediaDocument {
    pub id: String,
    pub kind: MediaKind,
    /// URI or content-store key.
    pub source: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub description: String,
    /// Publisher or archive the document comes from.
    #[serde(default)]
    pub provenance_source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub publication_date: Option<NaiveDate>,
    /// Date of the state depicted by the content. May lie in the future for planning documents.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_date: Option<NaiveDate>,
    #[serde(default)]
    pub tags: BTreeSet<String>,
}

impl MultimediaDocument {
    pub fn new(id: impl Into<String>, kind: MediaKind, source: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            kind,
            source: source.into(),
            title: String::new(),
            description: String::new(),
            provenance_source: String::new(),
            publication_date: None,
            reference_date: None,
            tags: BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thumbnail {
    pub document_id: String,
    pub image_source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locked_image_source: Option<String>,
}

/// Navigator filter. Every present field must match.
///
/// `date_range` applies to the reference date (inclusive bounds) and
/// excludes undated documents; `tags` requires every listed tag;
/// `title_substring` is case-insensitive.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterCriteria {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title_substring: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date_range: Option<(NaiveDate, NaiveDate)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tags: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kinds: Option<BTreeSet<MediaKind>>,
}

impl FilterCriteria {
    pub fn validate(&self) -> Result<()> {
        if let Some((start, end)) = self.date_range {
            if start > end {
                return Err(Error::InvalidRange {
                    start: start.to_string(),
                    end: end.to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn matches(&self, doc: &MultimediaDocument) -> bool {
        if let Some(needle) = &self.title_substring {
            if !doc.title.to_lowercase().contains(&needle.to_lowercase()) {
                return false;
            }
        }
        if let Some((start, end)) = self.date_range {
            match doc.reference_date {
                Some(d) if start <= d && d <= end => {}
                _ => return false,
            }
        }
        if let Some(tags) = &self.tags {
            if !tags.is_subset(&doc.tags) {
                return false;
            }
        }
        if let Some(kinds) = &self.kinds {
            if !kinds.contains(&doc.kind) {
                return false;
            }
        }
        true
    }
}

/// Documents satisfying every present criterion, in input order.
pub fn filter_documents(
    docs: &[MultimediaDocument],
    criteria: &FilterCriteria,
) -> Result<Vec<MultimediaDocument>> {
    criteria.validate()?;
    Ok(docs
        .iter()
        .filter(|d| criteria.matches(d))
        .cloned()
        .collect())
}

/// Stable ascending sort on reference date; undated documents go last.
pub fn sort_by_reference_date(docs: &[MultimediaDocument]) -> Vec<MultimediaDocument> {
    let mut sorted = docs.to_vec();
    sorted.sort_by_key(|d| (d.reference_date.is_none(), d.reference_date));
    sorted
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ymd(y: i32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, 6, 1).unwrap()
    }

    fn dated(id: &str, year: Option<i32>) -> MultimediaDocument {
        let mut d = MultimediaDocument::new(id, MediaKind::Image, format!("{id}.jpg"));
        d.reference_date = year.map(ymd);
        d
    }

    #[test]
    fn empty_criteria_is_identity() {
        let docs = vec![dated("a", Some(1900)), dated("b", None)];
        assert_eq!(
            filter_documents(&docs, &FilterCriteria::default()).unwrap(),
            docs
        );
    }

    #[test]
    fn date_range_selects_archival_photo() {
        let docs = vec![
            dated("p1760", Some(1760)),
            dated("p1900", Some(1900)),
            dated("p2017", Some(2017)),
        ];
        let criteria = FilterCriteria {
            date_range: Some((
                NaiveDate::from_ymd_opt(1750, 1, 1).unwrap(),
                NaiveDate::from_ymd_opt(1800, 12, 31).unwrap(),
            )),
            ..Default::default()
        };
        let out = filter_documents(&docs, &criteria).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].id, "p1760");
    }

    #[test]
    fn inverted_date_range_rejected() {
        let criteria = FilterCriteria {
            date_range: Some((ymd(1800), ymd(1750))),
            ..Default::default()
        };
        assert!(matches!(
            filter_documents(&[], &criteria),
            Err(Error::InvalidRange { .. })
        ));
    }

    #[test]
    fn title_filter_is_case_insensitive() {
        let mut a = dated("a", None);
        a.title = "Vallee de la chimie - Observatoire photographique".into();
        let mut b = dated("b", None);
        b.title = "Gratte-Ciel".into();
        let criteria = FilterCriteria {
            title_substring: Some("CHIMIE".into()),
            ..Default::default()
        };
        let out = filter_documents(&[a.clone(), b], &criteria).unwrap();
        assert_eq!(out, vec![a]);
    }

    #[test]
    fn tags_and_kinds() {
        let mut a = dated("a", None);
        a.tags = ["employment", "training"].map(String::from).into();
        let mut b = MultimediaDocument::new("b", MediaKind::Video, "b.mp4");
        b.tags = ["employment"].map(String::from).into();
        let docs = vec![a, b];
        let both_tags = FilterCriteria {
            tags: Some(["employment", "training"].map(String::from).into()),
            ..Default::default()
        };
        assert_eq!(filter_documents(&docs, &both_tags).unwrap().len(), 1);
        let videos = FilterCriteria {
            kinds: Some([MediaKind::Video].into()),
            ..Default::default()
        };
        assert_eq!(filter_documents(&docs, &videos).unwrap()[0].id, "b");
    }

    #[test]
    fn sort_examples() {
        assert!(sort_by_reference_date(&[]).is_empty());
        let docs = vec![
            dated("c", Some(2017)),
            dated("a", Some(1760)),
            dated("b", Some(1900)),
        ];
        let ids: Vec<_> = sort_by_reference_date(&docs)
            .into_iter()
            .map(|d| d.id)
            .collect();
        assert_eq!(ids, ["a", "b", "c"]);
        let docs = vec![dated("undated", None), dated("dated", Some(2000))];
        let ids: Vec<_> = sort_by_reference_date(&docs)
            .into_iter()
            .map(|d| d.id)
            .collect();
        assert_eq!(ids, ["dated", "undated"]);
    }

    #[test]
    fn kind_inference() {
        assert_eq!(
            MediaKind::infer_from_source("./assets/img/a.JPG"),
            MediaKind::Image
        );
        assert_eq!(
            MediaKind::infer_from_source("clip.mp4?t=3"),
            MediaKind::Video
        );
        assert_eq!(
            MediaKind::infer_from_source("x.gif"),
            MediaKind::AnimatedImage
        );
        assert_eq!(
            MediaKind::infer_from_source("jobs/operator.pdf"),
            MediaKind::Pdf
        );
        assert_eq!(
            MediaKind::infer_from_source(
                "https://umap.openstreetmap.fr/fr/map/vallee-de-la-chimie"
            ),
            MediaKind::WebPage
        );
        assert_eq!(
            MediaKind::infer_from_source("https://example.org/"),
            MediaKind::WebPage
        );
        assert_eq!(MediaKind::infer_from_source(".hidden"), MediaKind::WebPage);
    }

    #[test]
    fn unknown_kind_rejected() {
        assert!(serde_json::from_str::<MediaKind>("\"hologram\"").is_err());
        assert_eq!(
            serde_json::from_str::<MediaKind>("\"video_360\"").unwrap(),
            MediaKind::Video360
        );
    }

    fn doc_strategy() -> impl Strategy<Value = MultimediaDocument> {
        (
            0usize..1000,
            prop::option::of(1700i32..2100),
            prop::sample::select(MediaKind::ALL.to_vec()),
            "[a-c]{0,3}",
            prop::collection::btree_set("[xyz]", 0..3),
        )
            .prop_map(|(n, year, kind, title, tags)| {
                let mut d = MultimediaDocument::new(format!("d{n}"), kind, "s");
                d.reference_date = year.map(ymd);
                d.title = title;
                d.tags = tags;
                d
            })
    }

    fn criteria_strategy() -> impl Strategy<Value = FilterCriteria> {
        (
            prop::option::of("[a-c]{0,2}"),
            prop::option::of((1700i32..2100, 0i32..200)),
            prop::option::of(prop::collection::btree_set("[xyz]", 0..2)),
            prop::option::of(prop::collection::btree_set(
                prop::sample::select(MediaKind::ALL.to_vec()),
                0..3,
            )),
        )
            .prop_map(|(title, range, tags, kinds)| FilterCriteria {
                title_substring: title,
                date_range: range.map(|(start, len)| (ymd(start), ymd(start + len))),
                tags,
                kinds,
            })
    }

    proptest! {
        #[test]
        fn filter_is_subset_idempotent_and_conjunctive(
            docs in prop::collection::vec(doc_strategy(), 0..20),
            a in criteria_strategy(),
            b in criteria_strategy(),
        ) {
            let once = filter_documents(&docs, &a).unwrap();
            prop_assert!(once.iter().all(|d| docs.contains(d)));
            prop_assert_eq!(&filter_documents(&once, &a).unwrap(), &once);
            let chained = filter_documents(&once, &b).unwrap();
            let joint: Vec<_> = docs.iter().filter(|d| a.matches(d) && b.matches(d)).cloned().collect();
            prop_assert_eq!(chained, joint);
        }

        #[test]
        fn sort_is_stable_permutation(docs in prop::collection::vec(doc_strategy(), 0..20)) {
            let sorted = sort_by_reference_date(&docs);
            prop_assert_eq!(sorted.len(), docs.len());
            for d in &docs {
                prop_assert_eq!(
                    sorted.iter().filter(|s| *s == d).count(),
                    docs.iter().filter(|s| *s == d).count()
                );
            }
            for w in sorted.windows(2) {
                match (w[0].reference_date, w[1].reference_date) {
                    (Some(x), Some(y)) => prop_assert!(x <= y),
                    (None, Some(_)) => prop_assert!(false, "undated before dated"),
                    _ => {}
                }
            }
            // equal keys keep input order
            let key = |d: &MultimediaDocument| d.reference_date;
            for (i, x) in sorted.iter().enumerate() {
                for y in &sorted[i + 1..] {
                    if key(x) == key(y) {
                        let px = docs.iter().position(|d| d == x).unwrap();
                        let py = docs.iter().rposition(|d| d == y).unwrap();
                        prop_assert!(px <= py);
                    }
                }
            }
        }
    }
}
