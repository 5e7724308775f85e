//! The test oracles checked against each other and against hand-worked cases.

mod common;

use common::*;
use num_rational::Rational64 as Q;

#[test]
fn simplex_oracle_agrees_with_vertex_enumeration() {
    let mut rng = rng(11);
    for n in 1..=3 {
        for _ in 0..60 {
            let inst = RationalInstance::random(&mut rng, n);
            assert_eq!(
                inst.lp_optimum(),
                transport_vertices(&inst.supply, &inst.demand, &inst.cost),
                "n = {n}"
            );
        }
    }
}

#[test]
fn simplex_oracle_hand_cases() {
    let half = Q::new(1, 2);
    let one = Q::from_integer(1);
    let zero = Q::from_integer(0);
    // all mass must cross the unit-cost off-diagonal
    let cost = vec![vec![zero, one], vec![one, zero]];
    assert_eq!(transport_lp(&[one, zero], &[zero, one], &cost), one);
    assert_eq!(transport_lp(&[half, half], &[half, half], &cost), zero);
    // cheaper crossing is chosen
    let cost = vec![vec![Q::from_integer(5), one], vec![one, Q::from_integer(5)]];
    assert_eq!(transport_lp(&[half, half], &[half, half], &cost), one);
}

#[test]
fn rank_oracle_hand_cases() {
    assert_eq!(counting_ranks(&[1.0, 1.0, 2.0]), vec![1.5, 1.5, 3.0]);
    assert_eq!(counting_ranks(&[3.0, 1.0, 2.0]), vec![3.0, 1.0, 2.0]);
    let r = rank_pearson_oracle(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
    assert!((r - 0.8).abs() < 1e-15);
    assert_eq!(rank_pearson_oracle(&[1.0, 2.0], &[2.0, 1.0]), Some(-1.0));
    assert_eq!(rank_pearson_oracle(&[1.0, 1.0], &[2.0, 1.0]), None);
}
