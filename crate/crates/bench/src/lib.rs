//! Synthetic inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vifidel::metric::ResolvedWord;
use vifidel::{ReferenceSet, WordDistribution};

/// Embedding dimension of the pretrained vectors the metric is usually run with.
pub const DIM: usize = 300;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn vector(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..DIM).map(|_| rng.random_range(-0.5..0.5)).collect()
}

/// `n` distinct words with random vectors and random integer counts.
pub fn distribution(rng: &mut ChaCha8Rng, prefix: &str, n: usize) -> WordDistribution {
    WordDistribution::from_resolved(
        (0..n)
            .map(|i| {
                (
                    format!("{prefix}{i}"),
                    rng.random_range(1..4) as f64,
                    vector(rng),
                )
            })
            .collect::<Vec<_>>(),
    )
    .expect("valid synthetic distribution")
}

/// `m` references of `len` random words each.
pub fn references(rng: &mut ChaCha8Rng, m: usize, len: usize) -> ReferenceSet {
    let refs: Vec<Vec<ResolvedWord>> = (0..m)
        .map(|r| {
            (0..len)
                .map(|i| (format!("r{r}w{i}"), vector(rng)))
                .collect()
        })
        .collect();
    ReferenceSet::from_resolved("bench", refs)
}
