mod common;

use std::collections::{HashMap, HashSet};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spbo::seqpair::{kendall_tau, random_sp, Relation, SequencePair};

#[test]
fn random_sp_is_uniform_over_all_36() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let draws = 36_000;
    let mut counts: HashMap<String, usize> = HashMap::new();
    for _ in 0..draws {
        *counts.entry(random_sp(3, &mut rng).unwrap().to_string()).or_default() += 1;
    }
    assert_eq!(counts.len(), 36);
    let expected = draws as f64 / 36.0;
    let chi2: f64 = counts
        .values()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    // 35 degrees of freedom, 0.999 quantile is about 66.6
    assert!(chi2 < 66.6, "chi2 = {chi2}");
}

#[test]
fn canonical_keys_do_not_collide() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut by_key: HashMap<_, SequencePair> = HashMap::new();
    for _ in 0..10_000 {
        let sp = random_sp(8, &mut rng).unwrap();
        if let Some(prev) = by_key.insert(sp.canonical_key(), sp.clone()) {
            assert_eq!(prev, sp);
        }
    }
}

#[test]
fn exhaustive_relations_are_antisymmetric() {
    for sp in common::all_sequence_pairs(3) {
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(sp.relation(i, j).unwrap(), sp.relation(j, i).unwrap().opposite());
                }
            }
        }
    }
}

fn any_sp(max_n: usize) -> impl Strategy<Value = SequencePair> {
    (1..=max_n, any::<u64>())
        .prop_map(|(n, seed)| random_sp(n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap())
}

proptest! {
    #[test]
    fn display_parse_round_trip(sp in any_sp(30)) {
        let back: SequencePair = sp.to_string().parse().unwrap();
        prop_assert_eq!(back, sp);
    }

    #[test]
    fn json_round_trip(sp in any_sp(30)) {
        let text = serde_json::to_string(&sp).unwrap();
        let back: SequencePair = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, sp);
    }

    #[test]
    fn neighbors_are_distinct_adjacent_swaps(sp in any_sp(12)) {
        let n = sp.len();
        let nbrs = sp.neighbors();
        prop_assert_eq!(nbrs.len(), 2 * n.saturating_sub(1));
        let keys: HashSet<_> = nbrs.iter().map(|x| x.canonical_key()).collect();
        prop_assert_eq!(keys.len(), nbrs.len());
        for x in &nbrs {
            let d = kendall_tau(&x.pi, &sp.pi) + kendall_tau(&x.pi_prime, &sp.pi_prime);
            prop_assert_eq!(d, 1);
            prop_assert!(x != &sp);
        }
    }

    #[test]
    fn every_pair_has_exactly_one_relation(sp in any_sp(15)) {
        for i in 0..sp.len() {
            for j in 0..sp.len() {
                if i == j {
                    prop_assert!(sp.relation(i, j).is_err());
                    continue;
                }
                let r = sp.relation(i, j).unwrap();
                let pi_before = sp.pi.position(i) < sp.pi.position(j);
                let pp_before = sp.pi_prime.position(i) < sp.pi_prime.position(j);
                let expected = match (pi_before, pp_before) {
                    (true, true) => Relation::LeftOf,
                    (false, false) => Relation::RightOf,
                    (true, false) => Relation::Below,
                    (false, true) => Relation::Above,
                };
                prop_assert_eq!(r, expected);
            }
        }
    }
}
