use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use anyhow::{anyhow, bail, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use vifidel::corpus::{self, CaptionRecord};
use vifidel::{
    combine_scores, correlate as correlate_scores, forced_choice_accuracy, wmd_reference_baseline,
    AccuracyReport, BaselineMode, Error as CoreError, ScoreRecord, Split, TokenWarnings,
    WordDistribution,
};

use crate::args::{
    CombineArgs, CorrelateArgs, EmptyPolicy, EvalPairwiseArgs, MetricArg, ScoreArgs,
};
use crate::output::{fixed, fixed_or_dash, write_output};
use crate::pipeline::{
    image_distributions, load_images, record, require_file, score_pair, PairScore,
    ResolvedReferences, Resources,
};
use crate::{Summary, UsageError};

pub fn score(args: ScoreArgs) -> Result<Summary> {
    if args.detection.detections.is_empty() {
        return Err(UsageError("score requires at least one --detections file".into()).into());
    }
    require_file(&args.captions, "--captions")?;
    let res = Resources::load(&args.embedding)?;
    let images = image_distributions(
        &load_images(&args.detection)?,
        args.detection.binarize,
        &res,
    )?;
    let refs = args
        .references
        .as_deref()
        .map(|p| ResolvedReferences::load(p, &res))
        .transpose()?;
    let captions = corpus::read_jsonl::<CaptionRecord>(&args.captions)?;
    let source = args.captions.display().to_string();

    let score_one =
        |(line, c): &(usize, CaptionRecord)| -> Result<(ScoreRecord, Option<serde_json::Value>)> {
            let at = |e: anyhow::Error| anyhow!("{source}:{line}: {e:#}");
            let image = images.get(&c.image_id).ok_or_else(|| {
                anyhow!("{source}:{line}: no detections for image {:?}", c.image_id)
            })?;
            let candidate = res.caption(&c.caption).map_err(at)?;
            let selected = match &refs {
                Some(r) => {
                    let available = r.count(&c.image_id);
                    let n = args.n_refs.map_or(available, |n| n.min(available));
                    Some(r.select(&c.image_id, n, None).map_err(at)?)
                }
                None => None,
            };
            let warnings = TokenWarnings {
                caption_oov: candidate.dropped(),
                label_oov: image.dropped(),
                reference_oov: selected.as_ref().map_or(0, |(_, d)| *d),
                empty: None,
            };
            let set = selected.as_ref().map(|(s, _)| s);
            let outcome = score_pair(image, &candidate, set, res.params).map_err(at)?;
            if let (PairScore::Empty(reason), EmptyPolicy::Error) = (&outcome, args.empty_policy) {
                bail!("{source}:{line}: {reason}");
            }
            let plan = match (&outcome, &args.dump_plan) {
                (PairScore::Scored(v), Some(_)) => Some(serde_json::json!({
                    "image_id": c.image_id,
                    "candidate_id": c.candidate_id,
                    "plan": v.plan.to_json(),
                })),
                _ => None,
            };
            let references = set.map_or(0, |s| s.len());
            Ok((
                record(&c.image_id, &c.candidate_id, &outcome, references, warnings),
                plan,
            ))
        };
    let results: Vec<_> = captions.par_iter().map(score_one).collect();
    let (records, plans): (Vec<ScoreRecord>, Vec<Option<serde_json::Value>>) = results
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();

    write_output(args.output.as_deref(), &corpus::to_jsonl(&records))?;
    if let Some(path) = &args.summary {
        let mut tsv = String::from("image_id\tcandidate_id\tscore\twmd\treferences\n");
        for r in &records {
            tsv.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                r.image_id,
                r.candidate_id,
                fixed(r.score),
                fixed_or_dash(r.wmd),
                r.references
            ));
        }
        write_output(Some(path), &tsv)?;
    }
    if let Some(path) = &args.dump_plan {
        let plans: Vec<_> = plans.into_iter().flatten().collect();
        write_output(Some(path), &corpus::to_jsonl(&plans))?;
    }
    let skipped = records
        .iter()
        .filter(|r| r.warnings.empty.is_some())
        .count();
    Ok(Summary {
        scored: records.len() - skipped,
        skipped,
    })
}

#[derive(Serialize)]
struct SkippedLine<'a> {
    /// 0-based position of the item in the input file.
    item: usize,
    image_id: &'a str,
    reason: &'a str,
}

pub fn eval_pairwise(args: EvalPairwiseArgs) -> Result<Summary> {
    require_file(&args.items, "--items")?;
    let needs_refs = args.n_refs > 0 || args.metric != MetricArg::Vifidel;
    if args.metric != MetricArg::Vifidel && args.n_refs == 0 {
        return Err(UsageError(format!(
            "--metric {} needs --n-refs of at least 1",
            args.metric
        ))
        .into());
    }
    if needs_refs && args.references.is_none() {
        return Err(UsageError("--references is required when --n-refs is positive".into()).into());
    }
    if args.metric == MetricArg::Vifidel && args.detection.detections.is_empty() {
        return Err(
            UsageError("--metric vifidel requires at least one --detections file".into()).into(),
        );
    }
    let res = Resources::load(&args.embedding)?;
    let images = if args.metric == MetricArg::Vifidel {
        image_distributions(
            &load_images(&args.detection)?,
            args.detection.binarize,
            &res,
        )?
    } else {
        BTreeMap::new()
    };
    let refs = match (&args.references, needs_refs) {
        (Some(path), true) => Some(ResolvedReferences::load(path, &res)?),
        _ => None,
    };
    let (items, vote_skips) = corpus::load_forced_choice(&args.items)?;
    let tied: BTreeSet<usize> = vote_skips.iter().map(|s| s.index).collect();
    let file_index: Vec<usize> = (0..items.len() + tied.len())
        .filter(|i| !tied.contains(i))
        .collect();

    let run = |order: Option<&BTreeMap<String, Vec<usize>>>| -> AccuracyReport {
        let scorer = |image_id: &str, caption: &str, n: usize| -> vifidel::Result<f64> {
            pairwise_score(
                &args,
                &res,
                &images,
                refs.as_ref(),
                order,
                image_id,
                caption,
                n,
            )
            .map_err(|e| CoreError::Domain(format!("{e:#}")))
        };
        forced_choice_accuracy(&items, scorer, args.n_refs)
    };
    let reports: Vec<AccuracyReport> = if args.ref_sample_seeds.is_empty() {
        vec![run(None)]
    } else {
        let refs = refs
            .as_ref()
            .ok_or_else(|| UsageError("--ref-sample-seeds needs --references".into()))?;
        args.ref_sample_seeds
            .iter()
            .map(|&seed| run(Some(&reference_orders(refs, seed))))
            .collect()
    };

    let mut tsv = String::from("metric\tn_refs");
    for split in Split::ALL {
        tsv.push_str(&format!("\t{split}"));
    }
    tsv.push_str("\tall\n");
    tsv.push_str(&format!("{}\t{}", args.metric, args.n_refs));
    for split in Split::ALL {
        tsv.push_str(&format!(
            "\t{}",
            fixed_or_dash(mean(reports.iter().map(|r| r.split(split))))
        ));
    }
    tsv.push_str(&format!(
        "\t{}\n",
        fixed_or_dash(mean(reports.iter().map(|r| r.accuracy())))
    ));
    write_output(args.output.as_deref(), &tsv)?;

    let first = &reports[0];
    let mut skipped: Vec<SkippedLine> = vote_skips
        .iter()
        .map(|s| SkippedLine {
            item: s.index,
            image_id: &s.image_id,
            reason: &s.reason,
        })
        .chain(first.skipped.iter().map(|s| SkippedLine {
            item: file_index[s.index],
            image_id: &s.image_id,
            reason: &s.reason,
        }))
        .collect();
    skipped.sort_by_key(|s| s.item);
    for s in &skipped {
        log::warn!(
            "skipped item {} (image {:?}): {}",
            s.item,
            s.image_id,
            s.reason
        );
    }
    if let Some(path) = &args.skipped {
        write_output(Some(path), &corpus::to_jsonl(&skipped))?;
    }
    Ok(Summary {
        scored: first.overall.total,
        skipped: skipped.len(),
    })
}

/// Mean of the defined values, or `None` when there are none.
fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.flatten().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

/// A seeded shuffle of every image's reference indices, drawn in image-id
/// order so the result depends only on the seed and the file.
fn reference_orders(refs: &ResolvedReferences, seed: u64) -> BTreeMap<String, Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    refs.by_image
        .iter()
        .map(|(id, list)| {
            let mut order: Vec<usize> = (0..list.len()).collect();
            order.shuffle(&mut rng);
            (id.clone(), order)
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn pairwise_score(
    args: &EvalPairwiseArgs,
    res: &Resources,
    images: &BTreeMap<String, WordDistribution>,
    refs: Option<&ResolvedReferences>,
    order: Option<&BTreeMap<String, Vec<usize>>>,
    image_id: &str,
    caption: &str,
    n: usize,
) -> Result<f64> {
    let candidate = res.caption(caption)?;
    let set = match refs {
        Some(r) if n > 0 => {
            let order = order.and_then(|o| o.get(image_id)).map(Vec::as_slice);
            Some(r.select(image_id, n, order)?.0)
        }
        _ => None,
    };
    let empty = |reason: &str| -> Result<f64> {
        match args.empty_policy {
            EmptyPolicy::Zero => Ok(0.0),
            EmptyPolicy::Error => bail!("{reason}"),
        }
    };
    match args.metric {
        MetricArg::Vifidel => {
            let image = images
                .get(image_id)
                .ok_or_else(|| anyhow!("no detections for image {image_id:?}"))?;
            match score_pair(image, &candidate, set.as_ref(), res.params)? {
                PairScore::Scored(v) => Ok(v.score),
                PairScore::Empty(reason) => empty(reason),
            }
        }
        MetricArg::WmdBest | MetricArg::WmdWorst => {
            if candidate.is_empty() {
                return empty("candidate has no embeddable content words");
            }
            let set = set.expect("baselines always select references");
            let dists = set
                .references()
                .iter()
                .map(|words| {
                    WordDistribution::from_resolved(
                        words.iter().map(|(t, v)| (t.clone(), 1.0, v.clone())),
                    )
                })
                .collect::<vifidel::Result<Vec<_>>>()?;
            let mode = if args.metric == MetricArg::WmdBest {
                BaselineMode::Best
            } else {
                BaselineMode::Worst
            };
            Ok(wmd_reference_baseline(
                &candidate, &dists, mode, res.params,
            )?)
        }
    }
}

pub fn correlate(args: CorrelateArgs) -> Result<Summary> {
    require_file(&args.judgments, "--judgments")?;
    require_file(&args.scores, "--scores")?;
    let judgments = corpus::load_judgments(&args.judgments)?;
    let scores = corpus::load_scores(&args.scores)?;
    let c = correlate_scores(&judgments, &scores)?;
    let tsv = format!(
        "relevance\tthoroughness\tn\n{}\t{}\t{}\n",
        fixed(c.relevance),
        fixed(c.thoroughness),
        c.n
    );
    write_output(args.output.as_deref(), &tsv)?;
    Ok(Summary {
        scored: c.n,
        skipped: 0,
    })
}

pub fn combine(args: CombineArgs) -> Result<Summary> {
    let load = |p: &Path| -> Result<_> {
        require_file(p, "score file")?;
        Ok(corpus::load_scores(p)?)
    };
    let combined = combine_scores(&load(&args.first)?, &load(&args.second)?)?;
    write_output(args.output.as_deref(), &corpus::to_jsonl(&combined))?;
    Ok(Summary {
        scored: combined.len(),
        skipped: 0,
    })
}
