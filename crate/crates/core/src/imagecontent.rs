//! Per-image object labels from gold annotations or detector output.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embeddings::{EmbeddingTable, LookupPolicy};
use crate::error::{Error, Result};
use crate::textproc::WordDistribution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub label: String,
    /// Detector confidence; absent for gold annotations.
    #[serde(default, rename = "score", skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

impl Detection {
    pub fn gold(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            confidence: None,
        }
    }

    pub fn scored(label: impl Into<String>, confidence: f64) -> Self {
        Self {
            label: label.into(),
            confidence: Some(confidence),
        }
    }

    /// Gold annotations always pass.
    pub fn passes(&self, threshold: f64) -> bool {
        self.confidence.is_none_or(|c| c >= threshold)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceTag {
    Gold,
    Detector,
    Union,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageContent {
    pub image_id: String,
    pub detections: Vec<Detection>,
    pub source: SourceTag,
}

impl ImageContent {
    pub fn new(image_id: impl Into<String>, detections: Vec<Detection>, source: SourceTag) -> Self {
        Self {
            image_id: image_id.into(),
            detections,
            source,
        }
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.detections.iter().map(|d| d.label.as_str())
    }
}

/// Named confidence operating points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorProfile {
    /// 80-category COCO detector.
    D80,
    /// 545-category Open Images detector.
    D500,
    /// Annotations without scores; nothing is filtered.
    Gold,
}

impl DetectorProfile {
    pub fn threshold(self) -> f64 {
        match self {
            DetectorProfile::D80 => 0.6,
            DetectorProfile::D500 => 0.4,
            DetectorProfile::Gold => 0.0,
        }
    }
}

impl FromStr for DetectorProfile {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "d80" => Ok(Self::D80),
            "d500" => Ok(Self::D500),
            "gold" => Ok(Self::Gold),
            other => Err(format!("unknown detector profile {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MergeMode {
    /// One instance per distinct label across both sources.
    #[default]
    UnionUnique,
    /// Every instance from both sources.
    Concat,
}

impl FromStr for MergeMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "union-unique" => Ok(Self::UnionUnique),
            "concat" => Ok(Self::Concat),
            other => Err(format!(
                "unknown merge mode {other:?} (expected union-unique or concat)"
            )),
        }
    }
}

#[derive(Deserialize)]
struct DetectionLine {
    image_id: String,
    objects: Vec<Detection>,
}

/// Reads a detections JSONL file, dropping scored detections below `threshold`.
pub fn load_detections(
    path: impl AsRef<Path>,
    threshold: f64,
) -> Result<BTreeMap<String, ImageContent>> {
    let path = path.as_ref();
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Domain(format!(
            "detection threshold {threshold} outside [0, 1]"
        )));
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut images = BTreeMap::new();
    let mut any_scored = false;

    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: DetectionLine =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        for det in &parsed.objects {
            if det.label.trim().is_empty() {
                return Err(Error::parse(path, lineno, "empty object label"));
            }
            if let Some(c) = det.confidence {
                if !(0.0..=1.0).contains(&c) {
                    return Err(Error::parse(
                        path,
                        lineno,
                        format!("score {c} outside [0, 1]"),
                    ));
                }
                any_scored = true;
            }
        }
        if images.contains_key(&parsed.image_id) {
            return Err(Error::DuplicateImage {
                path: path.to_path_buf(),
                line: lineno,
                id: parsed.image_id,
            });
        }
        let detections = parsed
            .objects
            .into_iter()
            .filter(|d| d.passes(threshold))
            .collect();
        images.insert(
            parsed.image_id.clone(),
            ImageContent::new(parsed.image_id, detections, SourceTag::Gold),
        );
    }

    if any_scored {
        for content in images.values_mut() {
            content.source = SourceTag::Detector;
        }
    }
    Ok(images)
}

pub fn merge_sources(a: &ImageContent, b: &ImageContent, mode: MergeMode) -> Result<ImageContent> {
    if a.image_id != b.image_id {
        return Err(Error::ImageMismatch(a.image_id.clone(), b.image_id.clone()));
    }
    let all = a.detections.iter().chain(&b.detections);
    let detections = match mode {
        MergeMode::Concat => all.cloned().collect(),
        MergeMode::UnionUnique => {
            let mut seen = HashSet::new();
            all.filter(|d| seen.insert(d.label.as_str()))
                .cloned()
                .collect()
        }
    };
    Ok(ImageContent::new(
        a.image_id.clone(),
        detections,
        SourceTag::Union,
    ))
}

/// Merges any number of loaded sources per image. Images missing from a
/// source contribute nothing from it. A single source is returned unchanged.
pub fn merge_all(
    sources: Vec<BTreeMap<String, ImageContent>>,
    mode: MergeMode,
) -> Result<BTreeMap<String, ImageContent>> {
    let mut iter = sources.into_iter();
    let Some(mut merged) = iter.next() else {
        return Ok(BTreeMap::new());
    };
    for source in iter {
        let ids: Vec<String> = merged.keys().chain(source.keys()).cloned().collect();
        let mut next = BTreeMap::new();
        for id in ids {
            if next.contains_key(&id) {
                continue;
            }
            let empty = || ImageContent::new(id.clone(), Vec::new(), SourceTag::Union);
            let a = merged.get(&id).cloned().unwrap_or_else(empty);
            let b = source.get(&id).cloned().unwrap_or_else(empty);
            next.insert(id, merge_sources(&a, &b, mode)?);
        }
        merged = next;
    }
    Ok(merged)
}

/// Normalized label distribution of an image.
///
/// With `binarize` every distinct label gets equal mass; otherwise mass is
/// proportional to the number of instances.
pub fn build_image_nbow(
    content: &ImageContent,
    binarize: bool,
    table: &EmbeddingTable,
    policy: &LookupPolicy,
) -> Result<WordDistribution> {
    let mut counts: BTreeMap<&str, f64> = BTreeMap::new();
    for label in content.labels() {
        let c = counts.entry(label).or_insert(0.0);
        *c = if binarize { 1.0 } else { *c + 1.0 };
    }
    WordDistribution::from_counts(counts, table, policy)
}
