//! Image-aware evaluation of image descriptions.
//!
//! A candidate caption is scored against the objects depicted in an image by
//! solving an exact word mover's distance problem between the image's
//! normalized object-label distribution and the caption's content words, then
//! mapping the distance to a similarity with `exp(-distance)`. Human reference
//! descriptions, when available, are used to weight words by how consistently
//! the references mention them.
//!
//! The crate is organized bottom-up:
//!
//! * [`embeddings`] loads word2vec tables and resolves tokens to vectors.
//! * [`textproc`] turns text into normalized bags of content words.
//! * [`imagecontent`] ingests gold or detector labels per image.
//! * [`transport`] builds and exactly solves the transportation problem.
//! * [`metric`] computes scores, penalty weights, and baselines.
//! * [`evalharness`] runs forced-choice and rank-correlation evaluations.
//! * [`corpus`] reads and writes the JSONL record formats.

pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod evalharness;
pub mod imagecontent;
pub mod metric;
pub mod textproc;
pub mod transport;

pub use embeddings::{
    cosine, EmbeddingFormat, EmbeddingTable, JoinStrategy, LookupPolicy, OovBehavior,
};
pub use error::{Error, Result};
pub use evalharness::{
    correlate, forced_choice_accuracy, majority_vote, spearman, AccuracyReport, Choice,
    Correlation, ForcedChoiceItem, JudgmentItem, SkippedItem, Split, Vote,
};
pub use imagecontent::{
    build_image_nbow, load_detections, merge_sources, Detection, DetectorProfile, ImageContent,
    MergeMode, SourceTag,
};
pub use metric::{
    combine_scores, penalty_weights, vifidel, vifidel_with_weights, weighted_cost,
    wmd_reference_baseline, BaselineMode, MetricScore, PenaltyWeights, ReferenceSet, ScoreRecord,
    TokenWarnings, Vifidel,
};
pub use textproc::{build_nbow, tokenize, StopwordSet, WordDistribution};
pub use transport::{
    build_problem, solve, wmd, word_travel_cost, CostParams, TransportPlan, TransportProblem,
};
