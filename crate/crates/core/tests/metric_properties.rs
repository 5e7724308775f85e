//! Score-level properties of the visual fidelity metric.

mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use vifidel::{
    penalty_weights, vifidel, vifidel_with_weights, CostParams, PenaltyWeights, ReferenceSet,
    WordDistribution,
};

const WORDS: [&str; 10] = [
    "dog", "cat", "car", "tree", "man", "boat", "ball", "table", "horse", "bird",
];

fn table() -> vifidel::EmbeddingTable {
    synthetic_table(&WORDS, "xylophone", 5)
}

fn dist(words: &[(&str, f64)]) -> WordDistribution {
    let t = table();
    WordDistribution::from_resolved(
        words
            .iter()
            .map(|(w, m)| (w.to_string(), *m, t.get(w).unwrap().to_vec())),
    )
    .unwrap()
}

fn random_dist(rng: &mut rand_chacha::ChaCha8Rng, max: usize) -> WordDistribution {
    let k = rng.random_range(1..=max);
    let words: Vec<(&str, f64)> = (0..k)
        .map(|_| {
            (
                WORDS[rng.random_range(0..WORDS.len())],
                rng.random_range(1..4) as f64,
            )
        })
        .collect();
    dist(&words)
}

fn random_refs(rng: &mut rand_chacha::ChaCha8Rng, m: usize) -> ReferenceSet {
    let t = table();
    let refs = (0..m)
        .map(|_| {
            (0..rng.random_range(1..5))
                .map(|_| {
                    let w = WORDS[rng.random_range(0..WORDS.len())];
                    (w.to_string(), t.get(w).unwrap().to_vec())
                })
                .collect()
        })
        .collect();
    ReferenceSet::from_resolved("img", refs)
}

proptest! {
    #[test]
    fn score_is_in_unit_interval(seed in any::<u64>(), m in 0usize..4) {
        let mut r = rng(seed);
        let image = random_dist(&mut r, 5);
        let caption = random_dist(&mut r, 5);
        let refs = random_refs(&mut r, m);
        let out = vifidel(&image, &caption, (m > 0).then_some(&refs), CostParams::default()).unwrap();
        prop_assert!(out.score > 0.0 && out.score <= 1.0);
        prop_assert_eq!(out.score == 1.0, out.wmd == 0.0);
    }

    #[test]
    fn penalties_are_bounded(seed in any::<u64>(), m in 1usize..6) {
        let mut r = rng(seed);
        let image = random_dist(&mut r, 5);
        let caption = random_dist(&mut r, 5);
        let refs = random_refs(&mut r, m);
        let w = penalty_weights(&image, &caption, &refs).unwrap();
        prop_assert!(w.iter().all(|(_, v)| (0.0..=1.0).contains(&v)));
        prop_assert_eq!(w.len(), image.tokens().chain(caption.tokens()).collect::<std::collections::BTreeSet<_>>().len());
    }

    #[test]
    fn unit_weights_reduce_exactly(seed in any::<u64>()) {
        let mut r = rng(seed);
        let image = random_dist(&mut r, 5);
        let caption = random_dist(&mut r, 5);
        let ones = PenaltyWeights::constant(&image, &caption, 1.0).unwrap();
        let weighted = vifidel_with_weights(&image, &caption, &ones, CostParams::default()).unwrap();
        let plain = vifidel(&image, &caption, None, CostParams::default()).unwrap();
        prop_assert_eq!(weighted.score, plain.score);
    }

    #[test]
    fn zero_weights_collapse_to_one(seed in any::<u64>()) {
        let mut r = rng(seed);
        let image = random_dist(&mut r, 5);
        let caption = random_dist(&mut r, 5);
        let zeros = PenaltyWeights::constant(&image, &caption, 0.0).unwrap();
        let out = vifidel_with_weights(&image, &caption, &zeros, CostParams::default()).unwrap();
        prop_assert_eq!(out.wmd, 0.0);
        prop_assert_eq!(out.score, 1.0);
    }

    #[test]
    fn adding_a_distractor_lowers_the_score(seed in any::<u64>()) {
        let mut r = rng(seed);
        let image = random_dist(&mut r, 4);
        let k = r.random_range(1..=4);
        let words: Vec<(&str, f64)> = (0..k).map(|_| (WORDS[r.random_range(0..WORDS.len())], 1.0)).collect();
        let base = vifidel(&image, &dist(&words), None, CostParams::default()).unwrap().score;
        let t = table();
        let mut with = words.iter().map(|(w, m)| (w.to_string(), *m, t.get(w).unwrap().to_vec())).collect::<Vec<_>>();
        with.push(("xylophone".into(), 1.0, t.get("xylophone").unwrap().to_vec()));
        let worse = vifidel(&image, &WordDistribution::from_resolved(with).unwrap(), None, CostParams::default()).unwrap().score;
        prop_assert!(worse < base, "{worse} !< {base}");
    }

    #[test]
    fn word_order_does_not_matter(seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let t = table();
        let stop = vifidel::StopwordSet::english();
        let policy = vifidel::LookupPolicy::default();
        let mut r = rng(seed);
        let mut caption: Vec<String> = (0..6).map(|_| WORDS[r.random_range(0..WORDS.len())].to_string()).collect();
        let mut reference: Vec<String> = (0..4).map(|_| WORDS[r.random_range(0..WORDS.len())].to_string()).collect();
        let image = random_dist(&mut r, 4);
        let score = |caption: &[String], reference: &[String]| {
            let cand = vifidel::build_nbow(caption, &stop, &t, &policy).unwrap();
            let refs = ReferenceSet::from_texts("img", &[reference.join(" ")], &stop, &t, &policy).unwrap();
            vifidel(&image, &cand, Some(&refs), CostParams::default()).unwrap().score
        };
        let before = score(&caption, &reference);
        caption.shuffle(&mut r);
        reference.shuffle(&mut r);
        prop_assert_eq!(before, score(&caption, &reference));
    }
}
