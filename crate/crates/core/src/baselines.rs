//! Competitor algorithms: index-free Greedy and the single-axis index
//! baselines. All of them feed their candidates into the same refinement as
//! the engine, so only the cost of finding candidates differs.

use std::collections::VecDeque;
use std::time::Instant;

use crate::engine::{answer_query_with, refine, Community, QueryOptions, QueryStats};
use crate::error::Result;
use crate::index::{build_index, IndexConfig, SocialSpatialIndex};
use crate::metrics::dijkstra_row;
use crate::network::{keyword_overlap, QuerySpec, SpatialSocialNetwork, UserId};
use crate::pivots::PartitionStrategy;
use crate::prune::{PruneMode, RuleSet};

/// Hop-bounded BFS from q keeping keyword matches, then a road-distance
/// filter against q, then refinement. `nodes_visited` counts users touched.
pub fn greedy_baseline(net: &SpatialSocialNetwork, query: &QuerySpec) -> Result<(Community, QueryStats)> {
    query.validate(net)?;
    let start = Instant::now();
    let q = query.q;
    let m = net.user_count();
    let mut hops = vec![u32::MAX; m];
    hops[q as usize] = 0;
    let mut queue = VecDeque::from([q]);
    let mut touched = 1u64;
    let mut reached = Vec::new();
    while let Some(u) = queue.pop_front() {
        let next = hops[u as usize] + 1;
        if query.d != u32::MAX && next >= query.d {
            continue;
        }
        for &w in net.social.friends(u) {
            if hops[w as usize] == u32::MAX {
                hops[w as usize] = next;
                touched += 1;
                queue.push_back(w);
                if keyword_overlap(&net.user(w).keywords, &query.keywords) {
                    reached.push(w);
                }
            }
        }
    }
    let q_rows: Vec<Vec<f64>> = net
        .user(q)
        .checkins
        .iter()
        .map(|c| dijkstra_row(&net.road, c.road_vertex))
        .collect();
    let mut candidates = vec![q];
    for u in reached {
        let checkins = &net.user(u).checkins;
        let total: f64 = q_rows
            .iter()
            .flat_map(|row| checkins.iter().map(move |c| row[c.road_vertex as usize]))
            .sum();
        let avg = total / (q_rows.len() * checkins.len()) as f64;
        if avg < query.sigma {
            candidates.push(u);
        }
    }
    candidates.sort_unstable();
    let (community, mut stats) = refine(net, &candidates, query)?;
    stats.nodes_visited = touched;
    stats.candidates = candidates.len() as u64;
    stats.cpu_nanos = start.elapsed().as_nanos() as u64;
    Ok((community, stats))
}

/// Index over the social axis only: leaves grouped by hop distance.
pub fn build_sindex(net: &SpatialSocialNetwork, config: &IndexConfig) -> Result<SocialSpatialIndex> {
    build_index(
        net,
        &IndexConfig {
            strategy: PartitionStrategy::Social,
            ..config.clone()
        },
    )
}

/// Index over the spatial axis only: leaves grouped by road distance.
pub fn build_rindex(net: &SpatialSocialNetwork, config: &IndexConfig) -> Result<SocialSpatialIndex> {
    build_index(
        net,
        &IndexConfig {
            strategy: PartitionStrategy::Spatial,
            ..config.clone()
        },
    )
}

/// Traversal pruning only on hop distance and truss support.
pub fn sindex_baseline(
    net: &SpatialSocialNetwork,
    sindex: &SocialSpatialIndex,
    query: &QuerySpec,
) -> Result<(Community, QueryStats)> {
    answer_query_with(
        net,
        sindex,
        query,
        QueryOptions {
            mode: PruneMode::Sound,
            rules: RuleSet::SOCIAL,
        },
    )
}

/// Traversal pruning only on road distance and keywords.
pub fn rindex_baseline(
    net: &SpatialSocialNetwork,
    rindex: &SocialSpatialIndex,
    query: &QuerySpec,
) -> Result<(Community, QueryStats)> {
    answer_query_with(
        net,
        rindex,
        query,
        QueryOptions {
            mode: PruneMode::Sound,
            rules: RuleSet::SPATIAL_KEYWORD,
        },
    )
}

/// Ids of users Greedy would reach, for diagnostics.
pub fn greedy_reach(net: &SpatialSocialNetwork, q: UserId, d: u32) -> Vec<UserId> {
    let mut hops = vec![u32::MAX; net.user_count()];
    hops[q as usize] = 0;
    let mut queue = VecDeque::from([q]);
    let mut out = vec![q];
    while let Some(u) = queue.pop_front() {
        let next = hops[u as usize] + 1;
        if d != u32::MAX && next >= d {
            continue;
        }
        for &w in net.social.friends(u) {
            if hops[w as usize] == u32::MAX {
                hops[w as usize] = next;
                out.push(w);
                queue.push_back(w);
            }
        }
    }
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;

    #[test]
    fn all_answerers_agree_on_sample() {
        let net = fixture::sample_network();
        let q = fixture::sample_query();
        let cfg = IndexConfig {
            leaf_groups: Some(3),
            fanout: 2,
            ..IndexConfig::default()
        };
        let expected = fixture::SAMPLE_COMMUNITY.to_vec();
        assert_eq!(greedy_baseline(&net, &q).unwrap().0.members, expected);
        let s = build_sindex(&net, &cfg).unwrap();
        assert_eq!(sindex_baseline(&net, &s, &q).unwrap().0.members, expected);
        let r = build_rindex(&net, &cfg).unwrap();
        assert_eq!(rindex_baseline(&net, &r, &q).unwrap().0.members, expected);
    }

    #[test]
    fn keyword_annihilation_leaves_q() {
        let net = fixture::sample_network();
        let mut q = fixture::sample_query();
        q.keywords = [42].into();
        let (c, stats) = greedy_baseline(&net, &q).unwrap();
        assert_eq!(c.members, vec![2]);
        assert_eq!(stats.candidates, 1);
    }

    #[test]
    fn reach_respects_hop_limit() {
        let net = fixture::sample_network();
        assert_eq!(greedy_reach(&net, 2, 2), vec![1, 2, 4, 6]);
        assert_eq!(greedy_reach(&net, 0, u32::MAX), vec![0]);
    }
}
