use std::collections::BTreeSet;

use proptest::prelude::*;
use sstruss_core::checker::check_community;
use sstruss_core::datagen::{small_instance, SmallInstanceConfig};
use sstruss_core::engine::{answer_query, refine};
use sstruss_core::index::{build_index, deserialize_index, serialize_index, IndexConfig, SocialSpatialIndex};
use sstruss_core::io::{load_network, save_network};
use sstruss_core::metrics::{avg_dist_rn, compute_supports, influence_score, truss_peel, truss_peel_shuffled};
use sstruss_core::network::{validate_network, KeywordBits, QueryTopicVector, SpatialSocialNetwork, UserId};
use sstruss_core::pivots::PivotSearchConfig;

fn small_index(net: &SpatialSocialNetwork, seed: u64) -> SocialSpatialIndex {
    build_index(
        net,
        &IndexConfig {
            road_pivots: 3,
            social_pivots: 3,
            leaf_groups: Some(3),
            fanout: 2,
            search: PivotSearchConfig {
                global_iter: 2,
                swap_iter: 10,
                rng_seed: seed,
                ..PivotSearchConfig::default()
            },
            ..IndexConfig::default()
        },
    )
    .unwrap()
}

fn everyone(net: &SpatialSocialNetwork) -> Vec<UserId> {
    (0..net.user_count() as UserId).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn index_answer_equals_unpruned_refinement(seed in 0u64..1_000_000) {
        let (net, query) = small_instance(seed, &SmallInstanceConfig::default());
        let idx = small_index(&net, seed);
        let (pruned, stats) = answer_query(&net, &idx, &query).unwrap();
        let (full, _) = refine(&net, &everyone(&net), &query).unwrap();
        prop_assert_eq!(&pruned.members, &full.members);
        prop_assert_eq!(pruned.valid, full.valid);
        prop_assert!(pruned.members.contains(&query.q));
        prop_assert_eq!(stats.result_size as usize, pruned.members.len());
    }

    #[test]
    fn returned_validity_matches_checker(seed in 0u64..1_000_000) {
        let (net, query) = small_instance(seed, &SmallInstanceConfig::default());
        let idx = small_index(&net, seed);
        let (c, _) = answer_query(&net, &idx, &query).unwrap();
        let cert = check_community(&net, &query, &c.members.iter().copied().collect());
        prop_assert_eq!(cert.valid, c.valid);
        prop_assert_eq!(cert.valid, cert.failing.is_empty());
    }

    #[test]
    fn answers_are_deterministic(seed in 0u64..1_000_000) {
        let (net, query) = small_instance(seed, &SmallInstanceConfig::default());
        let idx = small_index(&net, seed);
        let (a, sa) = answer_query(&net, &idx, &query).unwrap();
        let (b, sb) = answer_query(&net, &idx, &query).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(sa.candidates, sb.candidates);
        prop_assert_eq!(sa.nodes_visited, sb.nodes_visited);
    }

    #[test]
    fn truss_is_order_independent_and_supported(seed in 0u64..1_000_000, k in 2u32..6, order in any::<u64>()) {
        let (net, _) = small_instance(seed, &SmallInstanceConfig::default());
        let all: BTreeSet<UserId> = everyone(&net).into_iter().collect();
        let edges = truss_peel(&net.social, &all, k);
        prop_assert_eq!(&edges, &truss_peel_shuffled(&net.social, &all, k, order));
        for &(a, b) in &edges {
            let common = all
                .iter()
                .filter(|&&w| {
                    let has = |x: UserId, y: UserId| edges.contains(&(x.min(y), x.max(y)));
                    w != a && w != b && has(a, w) && has(b, w)
                })
                .count() as u32;
            prop_assert!(common + 2 >= k, "edge ({a},{b}) has {common} triangles at k={k}");
        }
    }

    #[test]
    fn restricted_influence_never_exceeds_unrestricted(seed in 0u64..1_000_000, keep in any::<u16>()) {
        let (net, query) = small_instance(seed, &SmallInstanceConfig::default());
        let m = net.user_count() as UserId;
        prop_assume!(m >= 3);
        let within: BTreeSet<UserId> =
            (0..m).filter(|&u| u < 2 || keep & (1 << (u % 16)) != 0).collect();
        let topics: &QueryTopicVector = &query.topics;
        let free = influence_score(&net.social, 0, 1, topics, None).unwrap();
        let inside = influence_score(&net.social, 0, 1, topics, Some(&within)).unwrap();
        prop_assert!((0.0..=1.0).contains(&free));
        prop_assert!(inside <= free + 1e-12);
    }

    #[test]
    fn road_distance_is_symmetric(seed in 0u64..1_000_000) {
        let (net, _) = small_instance(seed, &SmallInstanceConfig::default());
        let m = net.user_count() as UserId;
        for u in 0..m.min(4) {
            for v in 0..m.min(4) {
                let a = avg_dist_rn(&net, u, v).unwrap();
                let b = avg_dist_rn(&net, v, u).unwrap();
                prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
            }
        }
    }

    #[test]
    fn keyword_bits_have_no_false_negatives(ids in prop::collection::btree_set(0u32..5000, 0..40), shift in 6u32..10) {
        let width = 1usize << shift;
        let bits = KeywordBits::from_keywords(&ids, width);
        for k in &ids {
            prop_assert!(bits.may_contain(*k));
        }
        prop_assert!(bits.count_ones() as usize <= ids.len());
    }
}

#[test]
fn supports_count_triangles() {
    for seed in 0..20 {
        let (net, _) = small_instance(seed, &SmallInstanceConfig::default());
        let sup = compute_supports(&net.social);
        for ((a, b), s) in sup.iter() {
            let common = net
                .social
                .friends(a)
                .iter()
                .filter(|&&w| net.social.are_friends(b, w))
                .count() as u32;
            assert_eq!(s, common, "seed {seed} edge ({a},{b})");
        }
    }
}

#[test]
fn network_and_index_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    for seed in 0..10 {
        let (net, _) = small_instance(seed, &SmallInstanceConfig::default());
        assert!(validate_network(&net).is_empty());
        let dir = tmp.path().join(seed.to_string());
        save_network(&net, &dir).unwrap();
        let back = load_network(&dir).unwrap();
        assert_eq!(back, net);

        let idx = small_index(&net, seed);
        let bytes = serialize_index(&idx);
        let decoded = deserialize_index(&bytes).unwrap();
        assert_eq!(decoded, idx);
        assert_eq!(serialize_index(&decoded), bytes);
    }
}

#[test]
fn truncated_index_is_rejected() {
    let (net, _) = small_instance(1, &SmallInstanceConfig::default());
    let bytes = serialize_index(&small_index(&net, 1));
    for cut in [0, 4, bytes.len() / 2, bytes.len() - 1] {
        assert!(deserialize_index(&bytes[..cut]).is_err(), "cut at {cut}");
    }
}
