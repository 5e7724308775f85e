//! Visual-fidelity scores, reference-derived penalty weights, single-reference
//! WMD baselines and score averaging.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::embeddings::{cosine, EmbeddingTable, LookupPolicy};
use crate::error::{Error, Result};
use crate::textproc::{tokenize, StopwordSet, WordDistribution};
use crate::transport::{
    build_problem, euclidean_pow, solve, wmd, word_travel_cost, CostParams, TransportPlan,
};

/// A content word of a reference together with its embedding.
pub type ResolvedWord = (String, Vec<f64>);

/// Human references for one image, reduced to embeddable content words.
///
/// References that end up with no content words are not stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReferenceSet {
    pub image_id: String,
    references: Vec<Vec<ResolvedWord>>,
    dropped_tokens: usize,
    dropped_references: usize,
}

impl ReferenceSet {
    pub fn from_resolved(image_id: impl Into<String>, references: Vec<Vec<ResolvedWord>>) -> Self {
        let before = references.len();
        let references: Vec<_> = references.into_iter().filter(|r| !r.is_empty()).collect();
        Self {
            image_id: image_id.into(),
            dropped_references: before - references.len(),
            references,
            dropped_tokens: 0,
        }
    }

    /// Runs each reference through the same pipeline as candidates:
    /// tokenize, drop stopwords, drop tokens without an embedding.
    pub fn from_texts<S: AsRef<str>>(
        image_id: impl Into<String>,
        texts: &[S],
        stopwords: &StopwordSet,
        table: &EmbeddingTable,
        policy: &LookupPolicy,
    ) -> Result<Self> {
        let mut dropped = 0;
        let mut references = Vec::with_capacity(texts.len());
        for text in texts {
            let mut words = Vec::new();
            for token in tokenize(text.as_ref()) {
                if stopwords.contains(&token) {
                    continue;
                }
                match table.lookup(&token, policy)? {
                    Some(v) => words.push((token, v.into_owned())),
                    None => dropped += 1,
                }
            }
            references.push(words);
        }
        let mut set = Self::from_resolved(image_id, references);
        set.dropped_tokens = dropped;
        Ok(set)
    }

    /// Number of usable references (M).
    pub fn len(&self) -> usize {
        self.references.len()
    }

    pub fn is_empty(&self) -> bool {
        self.references.is_empty()
    }

    pub fn references(&self) -> &[Vec<ResolvedWord>] {
        &self.references
    }

    pub fn dropped_tokens(&self) -> usize {
        self.dropped_tokens
    }

    pub fn dropped_references(&self) -> usize {
        self.dropped_references
    }
}

/// Per-word penalties in `[0, 1]` for one image and candidate.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PenaltyWeights {
    weights: BTreeMap<String, f64>,
}

impl PenaltyWeights {
    pub fn from_map(weights: BTreeMap<String, f64>) -> Result<Self> {
        if let Some((t, w)) = weights.iter().find(|(_, w)| !(0.0..=1.0).contains(*w)) {
            return Err(Error::Domain(format!(
                "penalty weight {w} for {t:?} outside [0, 1]"
            )));
        }
        Ok(Self { weights })
    }

    /// The same weight for every token of both distributions.
    pub fn constant(
        image: &WordDistribution,
        candidate: &WordDistribution,
        value: f64,
    ) -> Result<Self> {
        Self::from_map(
            image
                .tokens()
                .chain(candidate.tokens())
                .map(|t| (t.to_string(), value))
                .collect(),
        )
    }

    pub fn get(&self, token: &str) -> Option<f64> {
        self.weights.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.weights.iter().map(|(t, &w)| (t.as_str(), w))
    }
}

/// Penalty for every image label and candidate word: one minus the best
/// cosine match within each reference, halved, averaged over references.
///
/// Words mentioned (or closely paraphrased) by every reference get a penalty
/// near 0; words no reference comes close to get a penalty near 1.
pub fn penalty_weights(
    image: &WordDistribution,
    candidate: &WordDistribution,
    refs: &ReferenceSet,
) -> Result<PenaltyWeights> {
    if refs.is_empty() {
        return Err(Error::NoReferences(refs.image_id.clone()));
    }
    let m = refs.len() as f64;
    let mut weights = BTreeMap::new();
    for (token, _, x_k) in image.iter().chain(candidate.iter()) {
        if weights.contains_key(token) {
            continue;
        }
        let mut total = 0.0;
        for reference in refs.references() {
            let best = reference
                .iter()
                .map(|(_, x_t)| similarity(x_k, x_t))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            total += (1.0 - best) / 2.0;
        }
        weights.insert(token.to_string(), (total / m).clamp(0.0, 1.0));
    }
    Ok(PenaltyWeights { weights })
}

// A zero vector has no direction; it is treated as unrelated to everything.
fn similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    match cosine(u, v) {
        Err(Error::Domain(_)) if u.len() == v.len() => Ok(0.0),
        other => other,
    }
}

/// `‖ρ_u·u − ρ_v·v‖^p`; with both weights 1 this is exactly the plain travel cost.
pub fn weighted_cost(
    u: &[f64],
    v: &[f64],
    rho_u: f64,
    rho_v: f64,
    params: CostParams,
) -> Result<f64> {
    for rho in [rho_u, rho_v] {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::Domain(format!(
                "penalty weight {rho} outside [0, 1]"
            )));
        }
    }
    if u.len() != v.len() {
        return Err(Error::Domain(format!(
            "weighted cost between vectors of dimension {} and {}",
            u.len(),
            v.len()
        )));
    }
    Ok(euclidean_pow(
        u.iter().zip(v).map(|(a, b)| rho_u * a - rho_v * b),
        params.p(),
    ))
}

/// Result of scoring one candidate against one image.
#[derive(Debug, Clone, PartialEq)]
pub struct Vifidel {
    pub score: f64,
    /// Transport objective (weighted when `weights` is set).
    pub wmd: f64,
    pub plan: TransportPlan,
    pub weights: Option<PenaltyWeights>,
    /// References were supplied but none survived filtering.
    pub reference_fallback: bool,
}

/// `exp(-WMD(image, candidate))`, with penalty-weighted costs when usable
/// references are supplied.
///
/// A reference set that is empty after filtering falls back to the unweighted
/// cost and sets `reference_fallback`.
pub fn vifidel(
    image: &WordDistribution,
    candidate: &WordDistribution,
    refs: Option<&ReferenceSet>,
    params: CostParams,
) -> Result<Vifidel> {
    check_nonempty(image, candidate)?;
    match refs {
        Some(refs) if !refs.is_empty() => {
            let weights = penalty_weights(image, candidate, refs)?;
            vifidel_with_weights(image, candidate, &weights, params)
        }
        _ => {
            let problem = build_problem(image, candidate, |(_, u), (_, v)| {
                word_travel_cost(u, v, params)
            })?;
            let plan = solve(&problem)?;
            if let Some(r) = refs {
                log::warn!(
                    "image {:?}: no usable references, scoring without weights",
                    r.image_id
                );
            }
            Ok(Vifidel {
                score: (-plan.objective).exp(),
                wmd: plan.objective,
                plan,
                weights: None,
                reference_fallback: refs.is_some(),
            })
        }
    }
}

/// Scores with explicit penalty weights; every token of both distributions
/// must have one.
pub fn vifidel_with_weights(
    image: &WordDistribution,
    candidate: &WordDistribution,
    weights: &PenaltyWeights,
    params: CostParams,
) -> Result<Vifidel> {
    check_nonempty(image, candidate)?;
    let rho = |t: &str| {
        weights
            .get(t)
            .ok_or_else(|| Error::Domain(format!("no penalty weight for {t:?}")))
    };
    let problem = build_problem(image, candidate, |(a, u), (b, v)| {
        weighted_cost(u, v, rho(a)?, rho(b)?, params)
    })?;
    let plan = solve(&problem)?;
    Ok(Vifidel {
        score: (-plan.objective).exp(),
        wmd: plan.objective,
        plan,
        weights: Some(weights.clone()),
        reference_fallback: false,
    })
}

fn check_nonempty(image: &WordDistribution, candidate: &WordDistribution) -> Result<()> {
    if image.is_empty() {
        return Err(Error::EmptyDistribution("image has no embeddable labels"));
    }
    if candidate.is_empty() {
        return Err(Error::EmptyDistribution(
            "candidate has no embeddable content words",
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMode {
    Best,
    Worst,
}

/// Candidate-vs-single-reference WMD similarity, taking the closest (`Best`)
/// or farthest (`Worst`) reference. Empty references are ignored.
pub fn wmd_reference_baseline(
    candidate: &WordDistribution,
    refs: &[WordDistribution],
    mode: BaselineMode,
    params: CostParams,
) -> Result<f64> {
    if candidate.is_empty() {
        return Err(Error::EmptyDistribution(
            "candidate has no embeddable content words",
        ));
    }
    let sims = refs
        .iter()
        .filter(|r| !r.is_empty())
        .map(|r| wmd(candidate, r, params).map(|d| (-d).exp()))
        .collect::<Result<Vec<f64>>>()?;
    if sims.is_empty() {
        return Err(Error::NoReferences(String::new()));
    }
    let pick = match mode {
        BaselineMode::Best => f64::max,
        BaselineMode::Worst => f64::min,
    };
    Ok(sims.into_iter().reduce(pick).expect("nonempty"))
}

/// A score keyed by image and candidate; the minimal shape of any metric's
/// output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricScore {
    pub image_id: String,
    pub candidate_id: String,
    pub score: f64,
}

/// Element-wise mean of two aligned score lists.
pub fn combine_scores(a: &[MetricScore], b: &[MetricScore]) -> Result<Vec<MetricScore>> {
    let key = |s: &MetricScore| format!("({}, {})", s.image_id, s.candidate_id);
    for (index, (x, y)) in a.iter().zip(b).enumerate() {
        if x.image_id != y.image_id || x.candidate_id != y.candidate_id {
            return Err(Error::Alignment {
                index,
                expected: key(x),
                found: key(y),
            });
        }
    }
    if a.len() != b.len() {
        let index = a.len().min(b.len());
        let describe = |list: &[MetricScore]| {
            list.get(index)
                .map_or_else(|| "end of list".to_string(), key)
        };
        return Err(Error::Alignment {
            index,
            expected: describe(a),
            found: describe(b),
        });
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| MetricScore {
            image_id: x.image_id.clone(),
            candidate_id: x.candidate_id.clone(),
            score: (x.score + y.score) / 2.0,
        })
        .collect())
}

/// Dropped-token counts attached to a score.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenWarnings {
    pub caption_oov: usize,
    pub label_oov: usize,
    pub reference_oov: usize,
    /// Set when the score is the empty-distribution sentinel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub empty: Option<String>,
}

/// One scored (image, candidate) pair as written to JSONL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub image_id: String,
    pub candidate_id: String,
    pub score: f64,
    /// `None` only for the zero-score sentinel of an empty distribution.
    pub wmd: Option<f64>,
    /// References used for penalty weights (0 = unweighted).
    pub references: usize,
    pub warnings: TokenWarnings,
}

impl ScoreRecord {
    pub fn new(
        image_id: impl Into<String>,
        candidate_id: impl Into<String>,
        result: &Vifidel,
        references: usize,
        warnings: TokenWarnings,
    ) -> Self {
        Self {
            image_id: image_id.into(),
            candidate_id: candidate_id.into(),
            score: result.score,
            wmd: Some(result.wmd),
            references: if result.weights.is_some() {
                references
            } else {
                0
            },
            warnings,
        }
    }

    pub fn empty_sentinel(
        image_id: impl Into<String>,
        candidate_id: impl Into<String>,
        mut warnings: TokenWarnings,
        reason: impl Into<String>,
    ) -> Self {
        warnings.empty = Some(reason.into());
        Self {
            image_id: image_id.into(),
            candidate_id: candidate_id.into(),
            score: 0.0,
            wmd: None,
            references: 0,
            warnings,
        }
    }

    pub fn metric_score(&self) -> MetricScore {
        MetricScore {
            image_id: self.image_id.clone(),
            candidate_id: self.candidate_id.clone(),
            score: self.score,
        }
    }
}
