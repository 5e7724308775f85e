//! JSONL record formats for captions, references, forced-choice items,
//! judgments and scores.
//!
//! Every reader reports the 1-based line number of the first bad line. Blank
//! lines are skipped.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evalharness::{
    majority_vote, Choice, ForcedChoiceItem, JudgmentItem, SkippedItem, Split, Vote,
};
use crate::metric::MetricScore;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionRecord {
    pub image_id: String,
    pub candidate_id: String,
    pub caption: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRecord {
    pub image_id: String,
    pub references: Vec<String>,
}

/// A single consensus label, or the raw per-annotator votes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelField {
    Single(Choice),
    Votes(Vec<Choice>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcedChoiceRecord {
    pub image_id: String,
    pub b: String,
    pub c: String,
    pub label: LabelField,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentRecord {
    pub image_id: String,
    pub candidate: String,
    pub relevance: f64,
    pub thoroughness: f64,
}

/// Parses every nonblank line as `T`, returning `(line number, record)`.
pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<(usize, T)>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        out.push((i + 1, record));
    }
    Ok(out)
}

/// One JSON document per line, each terminated by `\n`.
pub fn to_jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn load_captions(path: impl AsRef<Path>) -> Result<Vec<CaptionRecord>> {
    Ok(read_jsonl(path)?.into_iter().map(|(_, r)| r).collect())
}

/// References keyed by image, in file order within each image.
pub fn load_references(path: impl AsRef<Path>) -> Result<BTreeMap<String, Vec<String>>> {
    let path = path.as_ref();
    let mut map = BTreeMap::new();
    for (line, r) in read_jsonl::<ReferenceRecord>(path)? {
        if map.contains_key(&r.image_id) {
            return Err(Error::DuplicateImage {
                path: path.to_path_buf(),
                line,
                id: r.image_id,
            });
        }
        map.insert(r.image_id, r.references);
    }
    Ok(map)
}

/// Reads forced-choice items. Vote lists are reduced by majority; items whose
/// votes tie have no consensus label and are returned as skipped.
pub fn load_forced_choice(
    path: impl AsRef<Path>,
) -> Result<(Vec<ForcedChoiceItem>, Vec<SkippedItem>)> {
    let path = path.as_ref();
    let mut items = Vec::new();
    let mut skipped = Vec::new();
    for (index, (line, r)) in read_jsonl::<ForcedChoiceRecord>(path)?
        .into_iter()
        .enumerate()
    {
        if r.b.trim().is_empty() || r.c.trim().is_empty() {
            return Err(Error::parse(path, line, "empty caption"));
        }
        let label = match r.label {
            LabelField::Single(c) => c,
            LabelField::Votes(votes) => {
                match majority_vote(&votes).map_err(|e| Error::parse(path, line, e.to_string()))? {
                    Vote::Winner(c) => c,
                    Vote::Tie => {
                        skipped.push(SkippedItem {
                            index,
                            image_id: r.image_id,
                            reason: "human votes are tied".into(),
                        });
                        continue;
                    }
                }
            }
        };
        items.push(ForcedChoiceItem {
            image_id: r.image_id,
            caption_b: r.b,
            caption_c: r.c,
            human_label: label,
            split: r.split,
        });
    }
    Ok((items, skipped))
}

pub fn load_judgments(path: impl AsRef<Path>) -> Result<Vec<JudgmentItem>> {
    let path = path.as_ref();
    read_jsonl::<JudgmentRecord>(path)?
        .into_iter()
        .map(|(line, r)| {
            JudgmentItem::new(r.image_id, r.candidate, r.relevance, r.thoroughness)
                .map_err(|e| Error::parse(path, line, e.to_string()))
        })
        .collect()
}

/// Any JSONL with `image_id`, `candidate_id` and `score` fields; extra fields
/// (such as those of a full score record) are ignored.
pub fn load_scores(path: impl AsRef<Path>) -> Result<Vec<MetricScore>> {
    let path = path.as_ref();
    read_jsonl::<MetricScore>(path)?
        .into_iter()
        .map(|(line, s)| {
            if s.score.is_finite() {
                Ok(s)
            } else {
                Err(Error::parse(path, line, "score is not finite"))
            }
        })
        .collect()
}
