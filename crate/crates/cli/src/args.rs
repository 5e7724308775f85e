use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vifidel::{DetectorProfile, EmbeddingFormat, MergeMode};

#[derive(Debug, Parser)]
#[command(
    name = "vifidel",
    version,
    about = "Visual fidelity scoring for image descriptions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score captions against image object labels.
    Score(ScoreArgs),
    /// Binary forced-choice accuracy per split.
    EvalPairwise(EvalPairwiseArgs),
    /// Spearman correlation of scores with human judgments.
    Correlate(CorrelateArgs),
    /// Average two aligned score files.
    Combine(CombineArgs),
}

#[derive(Debug, Args)]
pub struct EmbeddingArgs {
    /// word2vec embeddings (text or binary).
    #[arg(long, env = "VIFIDEL_EMBEDDINGS")]
    pub embeddings: PathBuf,

    /// Embedding file format; `auto` tells text and binary apart.
    #[arg(long, env = "VIFIDEL_EMBEDDING_FORMAT", default_value = "auto", value_parser = parse_format)]
    pub embedding_format: EmbeddingFormat,

    /// Stopword list, one token per line; defaults to the built-in English list.
    #[arg(long, env = "VIFIDEL_STOPWORDS")]
    pub stopwords: Option<PathBuf>,

    /// What to do with tokens that have no embedding.
    #[arg(long, env = "VIFIDEL_OOV", value_enum, default_value_t = OovArg::Drop)]
    pub oov: OovArg,

    /// Exponent of the Euclidean travel cost.
    #[arg(long, env = "VIFIDEL_P", default_value_t = 2.0)]
    pub p: f64,
}

#[derive(Debug, Args)]
pub struct DetectionArgs {
    /// Detections JSONL; repeat to merge several sources.
    #[arg(long = "detections", env = "VIFIDEL_DETECTIONS")]
    pub detections: Vec<PathBuf>,

    /// Confidence threshold as a number or a profile (d80, d500, gold). Give
    /// one value for all sources or one per `--detections`.
    #[arg(long = "det-threshold", env = "VIFIDEL_DET_THRESHOLD", value_parser = parse_threshold)]
    pub det_threshold: Vec<f64>,

    /// How several sources combine: union-unique or concat.
    #[arg(long, env = "VIFIDEL_MERGE", default_value = "union-unique", value_parser = parse_merge)]
    pub merge: MergeMode,

    /// Count each distinct label once instead of once per instance.
    #[arg(long, env = "VIFIDEL_BINARIZE")]
    pub binarize: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Worker threads; defaults to the number of logical processors.
    #[arg(long, env = "VIFIDEL_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub embedding: EmbeddingArgs,
    #[command(flatten)]
    pub detection: DetectionArgs,
    #[command(flatten)]
    pub run: RunArgs,

    /// Captions JSONL: {"image_id", "candidate_id", "caption"}.
    #[arg(long, env = "VIFIDEL_CAPTIONS")]
    pub captions: PathBuf,

    /// References JSONL: {"image_id", "references": [...]}. Enables penalty weights.
    #[arg(long, env = "VIFIDEL_REFERENCES")]
    pub references: Option<PathBuf>,

    /// Use only the first N references of each image.
    #[arg(long, env = "VIFIDEL_N_REFS")]
    pub n_refs: Option<usize>,

    #[arg(long, env = "VIFIDEL_EMPTY_POLICY", value_enum, default_value_t = EmptyPolicy::Zero)]
    pub empty_policy: EmptyPolicy,

    /// Score records as JSONL; standard output when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,

    /// Tab-separated score table with six decimals.
    #[arg(long)]
    pub summary: Option<PathBuf>,

    /// Transport plans as JSONL, one per scored pair.
    #[arg(long)]
    pub dump_plan: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalPairwiseArgs {
    #[command(flatten)]
    pub embedding: EmbeddingArgs,
    #[command(flatten)]
    pub detection: DetectionArgs,
    #[command(flatten)]
    pub run: RunArgs,

    /// Forced-choice JSONL: {"image_id", "b", "c", "label", "split"}.
    #[arg(long, env = "VIFIDEL_ITEMS")]
    pub items: PathBuf,

    /// References JSONL; needed when --n-refs is positive.
    #[arg(long, env = "VIFIDEL_REFERENCES")]
    pub references: Option<PathBuf>,

    /// References per image (the first N in file order).
    #[arg(long, env = "VIFIDEL_N_REFS", default_value_t = 0)]
    pub n_refs: usize,

    #[arg(long, env = "VIFIDEL_METRIC", value_enum, default_value_t = MetricArg::Vifidel)]
    pub metric: MetricArg,

    /// Average over random reference subsets drawn with these seeds instead
    /// of taking the first N references.
    #[arg(long, value_delimiter = ',')]
    pub ref_sample_seeds: Vec<u64>,

    #[arg(long, env = "VIFIDEL_EMPTY_POLICY", value_enum, default_value_t = EmptyPolicy::Zero)]
    pub empty_policy: EmptyPolicy,

    /// Accuracy table as TSV; standard output when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,

    /// Skipped items as JSONL.
    #[arg(long)]
    pub skipped: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// Judgments JSONL: {"image_id", "candidate", "relevance", "thoroughness"}.
    #[arg(long)]
    pub judgments: PathBuf,

    /// Scores JSONL with "image_id", "candidate_id" and "score".
    #[arg(long)]
    pub scores: PathBuf,

    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CombineArgs {
    pub first: PathBuf,
    pub second: PathBuf,

    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OovArg {
    Drop,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmptyPolicy {
    /// Fail on the first caption or image with no content words.
    Error,
    /// Give such pairs a score of 0 and flag them.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Vifidel,
    /// Best single-reference WMD similarity.
    WmdBest,
    /// Worst single-reference WMD similarity.
    WmdWorst,
}

impl std::fmt::Display for MetricArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MetricArg::Vifidel => "vifidel",
            MetricArg::WmdBest => "wmd-best",
            MetricArg::WmdWorst => "wmd-worst",
        })
    }
}

fn parse_format(s: &str) -> Result<EmbeddingFormat, String> {
    s.parse()
}

fn parse_merge(s: &str) -> Result<MergeMode, String> {
    s.parse()
}

fn parse_threshold(s: &str) -> Result<f64, String> {
    let t = match s.parse::<f64>() {
        Ok(t) => t,
        Err(_) => s.parse::<DetectorProfile>()?.threshold(),
    };
    if (0.0..=1.0).contains(&t) {
        Ok(t)
    } else {
        Err(format!("threshold {t} outside [0, 1]"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds() {
        assert_eq!(parse_threshold("0.25"), Ok(0.25));
        assert_eq!(parse_threshold("d500"), Ok(0.4));
        assert_eq!(parse_threshold("D80"), Ok(0.6));
        assert!(parse_threshold("1.5").is_err());
        assert!(parse_threshold("yolo").is_err());
    }

    #[test]
    fn definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
