//! Forced-choice accuracy and rank correlation against human judgments.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::MetricScore;

/// Which of the two captions was preferred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Choice {
    #[serde(alias = "b")]
    B,
    #[serde(alias = "c")]
    C,
}

/// Outcome of a vote: a winner or an exact tie.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vote {
    Winner(Choice),
    Tie,
}

/// Caption-pair groups: human-correct, human-incorrect, human-machine,
/// machine-machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Split {
    HC,
    HI,
    HM,
    MM,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::HC, Split::HI, Split::HM, Split::MM];
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::HC => "HC",
            Split::HI => "HI",
            Split::HM => "HM",
            Split::MM => "MM",
        })
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "HC" => Ok(Split::HC),
            "HI" => Ok(Split::HI),
            "HM" => Ok(Split::HM),
            "MM" => Ok(Split::MM),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForcedChoiceItem {
    pub image_id: String,
    pub caption_b: String,
    pub caption_c: String,
    pub human_label: Choice,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JudgmentItem {
    pub image_id: String,
    pub candidate: String,
    pub relevance: f64,
    pub thoroughness: f64,
}

impl JudgmentItem {
    pub fn new(
        image_id: impl Into<String>,
        candidate: impl Into<String>,
        relevance: f64,
        thoroughness: f64,
    ) -> Result<Self> {
        for (name, v) in [("relevance", relevance), ("thoroughness", thoroughness)] {
            if !(1.0..=5.0).contains(&v) {
                return Err(Error::Domain(format!("{name} judgment {v} outside [1, 5]")));
            }
        }
        Ok(Self {
            image_id: image_id.into(),
            candidate: candidate.into(),
            relevance,
            thoroughness,
        })
    }
}

pub fn majority_vote(labels: &[Choice]) -> Result<Vote> {
    if labels.is_empty() {
        return Err(Error::Domain("majority vote over no labels".into()));
    }
    let b = labels.iter().filter(|&&l| l == Choice::B).count();
    let c = labels.len() - b;
    Ok(match b.cmp(&c) {
        std::cmp::Ordering::Greater => Vote::Winner(Choice::B),
        std::cmp::Ordering::Less => Vote::Winner(Choice::C),
        std::cmp::Ordering::Equal => Vote::Tie,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SplitAccuracy {
    /// Sum of per-item credit (1 correct, 0.5 metric tie, 0 wrong).
    pub correct: f64,
    pub total: usize,
}

impl SplitAccuracy {
    pub fn accuracy(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct / self.total as f64)
    }

    fn add(&mut self, credit: f64) {
        self.correct += credit;
        self.total += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedItem {
    pub index: usize,
    pub image_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct AccuracyReport {
    pub per_split: BTreeMap<Split, SplitAccuracy>,
    pub overall: SplitAccuracy,
    pub skipped: Vec<SkippedItem>,
}

impl AccuracyReport {
    pub fn split(&self, split: Split) -> Option<f64> {
        self.per_split.get(&split).and_then(SplitAccuracy::accuracy)
    }

    pub fn accuracy(&self) -> Option<f64> {
        self.overall.accuracy()
    }
}

/// Scores both captions of every item and credits the metric when it prefers
/// the human choice. Equal metric scores earn half credit.
///
/// `scorer(image_id, caption, n_refs)` must be deterministic. Items whose
/// scoring fails are listed in `skipped` and excluded from the totals. Items
/// are scored in parallel on the current rayon pool; aggregation follows input
/// order.
pub fn forced_choice_accuracy<F>(
    items: &[ForcedChoiceItem],
    scorer: F,
    n_refs: usize,
) -> AccuracyReport
where
    F: Fn(&str, &str, usize) -> Result<f64> + Sync,
{
    let score_one = |item: &ForcedChoiceItem| -> Result<f64> {
        let b = scorer(&item.image_id, &item.caption_b, n_refs)?;
        let c = scorer(&item.image_id, &item.caption_c, n_refs)?;
        if b.is_nan() || c.is_nan() {
            return Err(Error::Domain("scorer returned NaN".into()));
        }
        let predicted = if b > c {
            Choice::B
        } else if c > b {
            Choice::C
        } else {
            return Ok(0.5);
        };
        Ok(if predicted == item.human_label {
            1.0
        } else {
            0.0
        })
    };
    let credits: Vec<Result<f64>> = items.par_iter().map(score_one).collect();

    let mut report = AccuracyReport::default();
    for (index, (item, credit)) in items.iter().zip(credits).enumerate() {
        match credit {
            Ok(credit) => {
                report.per_split.entry(item.split).or_default().add(credit);
                report.overall.add(credit);
            }
            Err(e) => report.skipped.push(SkippedItem {
                index,
                image_id: item.image_id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    report
}

/// Fractional (tie-averaged) ranks starting at 1.
pub fn average_ranks(values: &[f64]) -> Result<Vec<f64>> {
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain("cannot rank NaN".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    Ok(ranks)
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Spearman's rank correlation: Pearson correlation of fractional ranks, so
/// ties are handled exactly.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Domain(format!(
            "spearman over lengths {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::Domain(
            "spearman needs at least two observations".into(),
        ));
    }
    let constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
    if constant(xs) || constant(ys) {
        return Err(Error::Domain(
            "spearman of a constant sequence is undefined".into(),
        ));
    }
    Ok(pearson(&average_ranks(xs)?, &average_ranks(ys)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub relevance: f64,
    pub thoroughness: f64,
    pub n: usize,
}

/// Spearman correlation of metric scores with both judgment criteria. The two
/// lists must be aligned position by position on (image id, candidate).
pub fn correlate(judgments: &[JudgmentItem], scores: &[MetricScore]) -> Result<Correlation> {
    for (index, (j, s)) in judgments.iter().zip(scores).enumerate() {
        if j.image_id != s.image_id || j.candidate != s.candidate_id {
            return Err(Error::Alignment {
                index,
                expected: format!("({}, {})", j.image_id, j.candidate),
                found: format!("({}, {})", s.image_id, s.candidate_id),
            });
        }
    }
    if judgments.len() != scores.len() {
        return Err(Error::Alignment {
            index: judgments.len().min(scores.len()),
            expected: format!("{} judgments", judgments.len()),
            found: format!("{} scores", scores.len()),
        });
    }
    let metric: Vec<f64> = scores.iter().map(|s| s.score).collect();
    let relevance: Vec<f64> = judgments.iter().map(|j| j.relevance).collect();
    let thoroughness: Vec<f64> = judgments.iter().map(|j| j.thoroughness).collect();
    Ok(Correlation {
        relevance: spearman(&metric, &relevance)?,
        thoroughness: spearman(&metric, &thoroughness)?,
        n: scores.len(),
    })
}
