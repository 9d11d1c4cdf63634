//! Property tests of the structural invariants: total orders, degree sums,
//! ordering-class counts, query-set exactness on random graphs, hash range,
//! and bound symmetries.

use std::collections::BTreeSet;

use proptest::prelude::*;

use sgmr_core::cq::{automorphisms, coset_representatives};
use sgmr_core::cyclecq::{canonical_run_sequences, orientation_class_count};
use sgmr_core::enumerate::{brute_force_oracle, canonical_instance_set};
use sgmr_core::graph::{bucket_hash, generators, make_order, OrderKind, SampleGraph};
use sgmr_core::plan::c5_join_bound;
use sgmr_core::samplecq::generate_cqs;
use sgmr_core::sim::{run_round, Scheme};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bucket_hash_stays_in_range(node in any::<u64>(), b in 1u64..512, seed in any::<u64>()) {
        let h = bucket_hash(node, b, seed);
        prop_assert!((1..=b).contains(&h));
    }

    #[test]
    fn node_orders_are_strict_and_transitive(
        seed in 0u64..1000,
        b in 1u64..6,
        kind in 0usize..3,
    ) {
        let g = generators::gnp(24, 0.25, seed);
        let kind = [OrderKind::Id, OrderKind::BucketThenId, OrderKind::DegreeThenId][kind];
        let order = make_order(&g, kind, b, seed).unwrap();
        let mut rng = generators::Rng::new(seed ^ 0xABCD);
        for _ in 0..64 {
            let (u, v, w) = (rng.below(24), rng.below(24), rng.below(24));
            if u != v {
                prop_assert!(order.lt(u, v) ^ order.lt(v, u));
            }
            if order.lt(u, v) && order.lt(v, w) {
                prop_assert!(order.lt(u, w));
            }
        }
    }

    #[test]
    fn degree_sum_is_twice_edges(n in 4u64..40, seed in any::<u64>(), q in 0.05f64..0.6) {
        let g = generators::gnp(n, q, seed);
        let sum: usize = g.nodes().iter().map(|&v| g.degree(v)).sum();
        prop_assert_eq!(sum, 2 * g.edge_count());
    }

    #[test]
    fn c5_join_bound_symmetry(t in prop::array::uniform5(1u64..500)) {
        let base = c5_join_bound(&t);
        for r in 0..5 {
            let rot: [u64; 5] = std::array::from_fn(|i| t[(i + r) % 5]);
            prop_assert!((c5_join_bound(&rot) - base).abs() <= 1e-9 * base.max(1.0));
            let rev: [u64; 5] = std::array::from_fn(|i| rot[4 - i]);
            prop_assert!((c5_join_bound(&rev) - base).abs() <= 1e-9 * base.max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ordering_classes_partition_the_permutations(
        mask in 0u32..1024, // edge subset of the 5-node complete graph
    ) {
        let all_pairs: Vec<(usize, usize)> =
            (0..5).flat_map(|a| (a + 1..5).map(move |b| (a, b))).collect();
        let edges: Vec<(usize, usize)> = all_pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &e)| e)
            .collect();
        let names = (0..5).map(|i| format!("N{i}")).collect();
        let s = SampleGraph::new(names, edges).unwrap();
        let reps = coset_representatives(&s).unwrap();
        let auts = automorphisms(&s).unwrap();
        prop_assert_eq!(reps.len() * auts.len(), 120);
    }

    #[test]
    fn query_sets_match_oracle_on_random_graphs(
        seed in 0u64..200,
        sample_idx in 0usize..4,
    ) {
        let name = ["triangle", "square", "lollipop", "star:4"][sample_idx];
        let s = SampleGraph::builtin(name).unwrap();
        let set = generate_cqs(&s).unwrap();
        let g = generators::gnp(11, 0.45, seed);
        let out = run_round(&g, &Scheme::BucketOrdered { b: 2 }, &set, seed).unwrap();
        let auts = automorphisms(&s).unwrap();
        let (found, dups) =
            canonical_instance_set(out.instances.iter().map(|i| i.tuple.clone()), &auts);
        prop_assert_eq!(dups, 0);
        prop_assert_eq!(found, brute_force_oracle(&g, &s).unwrap());
    }
}

#[test]
fn run_sequence_class_counts_match_direct_orbit_count() {
    for p in 3..=10 {
        assert_eq!(
            canonical_run_sequences(p).unwrap().len(),
            orientation_class_count(p),
            "p={p}"
        );
    }
}

#[test]
fn cycle_and_general_sets_find_the_same_instances() {
    // the two generation methods may differ in query count but not in the
    // instance sets they discover
    for (p, expected_runs, expected_general) in [(4usize, 3usize, 3usize), (5, 3, 7), (6, 8, 15)] {
        let runs = sgmr_core::cyclecq::cycle_cqs(p).unwrap();
        let general = generate_cqs(&runs.sample).unwrap();
        assert_eq!(runs.len(), expected_runs);
        assert_eq!(general.len(), expected_general);
        let auts = automorphisms(&runs.sample).unwrap();
        for seed in [5u64, 6, 7] {
            let g = generators::gnp(13, 0.5, seed);
            let a = run_round(&g, &Scheme::BucketOrdered { b: 2 }, &runs, seed).unwrap();
            let b = run_round(&g, &Scheme::BucketOrdered { b: 2 }, &general, seed).unwrap();
            let (sa, da) =
                canonical_instance_set(a.instances.iter().map(|i| i.tuple.clone()), &auts);
            let (sb, db) =
                canonical_instance_set(b.instances.iter().map(|i| i.tuple.clone()), &auts);
            assert_eq!((da, db), (0, 0));
            assert_eq!(sa, sb);
            let oracle: BTreeSet<Vec<u64>> = brute_force_oracle(&g, &runs.sample).unwrap();
            assert_eq!(sa, oracle);
        }
    }
}
