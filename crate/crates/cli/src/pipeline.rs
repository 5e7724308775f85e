//! Loading shared resources and scoring single pairs.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use vifidel::metric::ResolvedWord;
use vifidel::{
    build_image_nbow, build_nbow, imagecontent, load_detections, tokenize, vifidel, CostParams,
    EmbeddingTable, ImageContent, LookupPolicy, OovBehavior, ReferenceSet, ScoreRecord,
    StopwordSet, TokenWarnings, Vifidel, WordDistribution,
};

use crate::args::{DetectionArgs, EmbeddingArgs, OovArg};
use crate::UsageError;

/// Read-only state shared by all workers.
pub struct Resources {
    pub table: EmbeddingTable,
    pub stopwords: StopwordSet,
    pub policy: LookupPolicy,
    pub params: CostParams,
}

impl Resources {
    pub fn load(args: &EmbeddingArgs) -> Result<Self> {
        let params = CostParams::new(args.p).map_err(|e| UsageError(e.to_string()))?;
        require_file(&args.embeddings, "--embeddings")?;
        let stopwords = match &args.stopwords {
            Some(path) => {
                require_file(path, "--stopwords")?;
                StopwordSet::load(path)?
            }
            None => StopwordSet::english(),
        };
        let oov = match args.oov {
            OovArg::Drop => OovBehavior::DropWithWarning,
            OovArg::Error => OovBehavior::Error,
        };
        let table = EmbeddingTable::load(&args.embeddings, args.embedding_format)?;
        log::info!(
            "loaded {} vectors of dimension {}",
            table.len(),
            table.dimension()
        );
        Ok(Self {
            table,
            stopwords,
            policy: LookupPolicy::default().with_oov(oov),
            params,
        })
    }

    pub fn caption(&self, text: &str) -> Result<WordDistribution> {
        Ok(build_nbow(
            &tokenize(text),
            &self.stopwords,
            &self.table,
            &self.policy,
        )?)
    }

    /// Content words of one reference with their vectors, in text order.
    pub fn reference_words(&self, text: &str) -> Result<(Vec<ResolvedWord>, usize)> {
        let mut words = Vec::new();
        let mut dropped = 0;
        for token in tokenize(text) {
            if self.stopwords.contains(&token) {
                continue;
            }
            match self.table.lookup(&token, &self.policy)? {
                Some(v) => words.push((token, v.into_owned())),
                None => dropped += 1,
            }
        }
        Ok((words, dropped))
    }
}

/// Loads and merges every detections source, one threshold per source.
pub fn load_images(args: &DetectionArgs) -> Result<BTreeMap<String, ImageContent>> {
    let thresholds = match args.det_threshold.len() {
        0 => vec![0.0; args.detections.len()],
        1 => vec![args.det_threshold[0]; args.detections.len()],
        n if n == args.detections.len() => args.det_threshold.clone(),
        n => {
            return Err(UsageError(format!(
                "{n} values for --det-threshold but {} detection sources",
                args.detections.len()
            ))
            .into())
        }
    };
    let mut sources = Vec::with_capacity(args.detections.len());
    for (path, threshold) in args.detections.iter().zip(thresholds) {
        require_file(path, "--detections")?;
        sources.push(load_detections(path, threshold)?);
    }
    Ok(imagecontent::merge_all(sources, args.merge)?)
}

pub fn require_file(path: &Path, flag: &str) -> Result<()> {
    if !path.is_file() {
        return Err(UsageError(format!("{flag}: {} does not exist", path.display())).into());
    }
    Ok(())
}

pub fn image_distributions(
    images: &BTreeMap<String, ImageContent>,
    binarize: bool,
    res: &Resources,
) -> Result<BTreeMap<String, WordDistribution>> {
    images
        .iter()
        .map(|(id, content)| {
            let dist = build_image_nbow(content, binarize, &res.table, &res.policy)
                .with_context(|| format!("image {id:?}"))?;
            Ok((id.clone(), dist))
        })
        .collect()
}

/// Every reference of every image, resolved once up front.
pub struct ResolvedReferences {
    pub by_image: BTreeMap<String, Vec<(Vec<ResolvedWord>, usize)>>,
}

impl ResolvedReferences {
    pub fn load(path: &Path, res: &Resources) -> Result<Self> {
        require_file(path, "--references")?;
        let raw = vifidel::corpus::load_references(path)?;
        let mut by_image = BTreeMap::new();
        for (id, texts) in raw {
            let refs = texts
                .iter()
                .map(|t| res.reference_words(t))
                .collect::<Result<Vec<_>>>()?;
            by_image.insert(id, refs);
        }
        Ok(Self { by_image })
    }

    /// The chosen references of an image as a set, with the OOV count of
    /// those references. `order` picks reference indices; `None` keeps file
    /// order. Errors if fewer than `n` references exist.
    pub fn select(
        &self,
        image_id: &str,
        n: usize,
        order: Option<&[usize]>,
    ) -> Result<(ReferenceSet, usize)> {
        let all = self
            .by_image
            .get(image_id)
            .map(Vec::as_slice)
            .unwrap_or_default();
        if n > all.len() {
            bail!(
                "image {image_id:?} has {} references, {n} requested",
                all.len()
            );
        }
        let picked: Vec<&(Vec<ResolvedWord>, usize)> = match order {
            Some(order) => order.iter().take(n).map(|&i| &all[i]).collect(),
            None => all[..n].iter().collect(),
        };
        let dropped = picked.iter().map(|(_, d)| d).sum();
        let set = ReferenceSet::from_resolved(
            image_id,
            picked.into_iter().map(|(w, _)| w.clone()).collect(),
        );
        Ok((set, dropped))
    }

    pub fn count(&self, image_id: &str) -> usize {
        self.by_image.get(image_id).map_or(0, Vec::len)
    }
}

/// Outcome of scoring one pair: a full result, or the reason one side was
/// empty.
pub enum PairScore {
    Scored(Box<Vifidel>),
    Empty(&'static str),
}

pub fn score_pair(
    image: &WordDistribution,
    candidate: &WordDistribution,
    refs: Option<&ReferenceSet>,
    params: CostParams,
) -> Result<PairScore> {
    if image.is_empty() {
        return Ok(PairScore::Empty("image has no embeddable labels"));
    }
    if candidate.is_empty() {
        return Ok(PairScore::Empty(
            "candidate has no embeddable content words",
        ));
    }
    Ok(PairScore::Scored(Box::new(vifidel(
        image, candidate, refs, params,
    )?)))
}

pub fn record(
    image_id: &str,
    candidate_id: &str,
    outcome: &PairScore,
    references: usize,
    warnings: TokenWarnings,
) -> ScoreRecord {
    match outcome {
        PairScore::Scored(v) => ScoreRecord::new(image_id, candidate_id, v, references, warnings),
        PairScore::Empty(reason) => {
            ScoreRecord::empty_sentinel(image_id, candidate_id, warnings, *reason)
        }
    }
}
