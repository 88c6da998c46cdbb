//! Exact graph metrics: road shortest paths, average check-in distance,
//! social hop distance, triangle support / truss peeling and topic-aware
//! influence scores.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::{
    CheckIn, QueryTopicVector, RoadNetwork, SocialNetwork, SpatialSocialNetwork, TopicEdge,
    UserId, VertexId,
};

/// Hop distance marking "unreachable".
pub const HOP_INF: u32 = u32::MAX;

/// Single-source distances, indexed by target id.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTable<T> {
    pub source: u32,
    dist: Vec<T>,
}

impl<T: Copy> DistanceTable<T> {
    pub fn get(&self, target: u32) -> T {
        self.dist[target as usize]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.dist
    }

    pub fn into_vec(self) -> Vec<T> {
        self.dist
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Dijkstra over road edge lengths. Unreachable vertices get `f64::INFINITY`.
pub fn road_shortest_paths(net: &RoadNetwork, source: VertexId) -> Result<DistanceTable<f64>> {
    if !net.contains(source) {
        return Err(Error::UnknownVertex(source));
    }
    Ok(DistanceTable {
        source,
        dist: dijkstra_row(net, source),
    })
}

pub(crate) fn dijkstra_row(net: &RoadNetwork, source: VertexId) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; net.vertex_count()];
    let mut heap = BinaryHeap::new();
    dist[source as usize] = 0.0;
    heap.push(Reverse((Key(0.0), source)));
    while let Some(Reverse((Key(d), v))) = heap.pop() {
        if d > dist[v as usize] {
            continue;
        }
        for &(w, len) in net.neighbors(v) {
            let nd = d + len;
            if nd < dist[w as usize] {
                dist[w as usize] = nd;
                heap.push(Reverse((Key(nd), w)));
            }
        }
    }
    dist
}

/// Mean over all check-in pairs, given one shortest-path row per check-in of
/// the first user.
pub fn mean_checkin_distance(rows: &[&[f64]], targets: &[CheckIn]) -> f64 {
    let mut total = 0.0;
    for row in rows {
        for c in targets {
            total += row[c.road_vertex as usize];
        }
    }
    total / (rows.len() * targets.len()) as f64
}

/// Average road distance between every check-in of `u` and every check-in of `v`.
pub fn avg_dist_rn(net: &SpatialSocialNetwork, u: UserId, v: UserId) -> Result<f64> {
    for x in [u, v] {
        if !net.social.contains(x) {
            return Err(Error::UnknownUser(x));
        }
    }
    let rows: Vec<Vec<f64>> = net
        .user(u)
        .checkins
        .iter()
        .map(|c| dijkstra_row(&net.road, c.road_vertex))
        .collect();
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    Ok(mean_checkin_distance(&refs, &net.user(v).checkins))
}

/// Breadth-first hop counts over friendships (edge direction ignored).
pub fn social_hops(net: &SocialNetwork, source: UserId) -> Result<DistanceTable<u32>> {
    if !net.contains(source) {
        return Err(Error::UnknownUser(source));
    }
    Ok(DistanceTable {
        source,
        dist: bfs_row(net, source),
    })
}

pub(crate) fn bfs_row(net: &SocialNetwork, source: UserId) -> Vec<u32> {
    let mut dist = vec![HOP_INF; net.user_count()];
    dist[source as usize] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let next = dist[u as usize] + 1;
        for &w in net.friends(u) {
            if dist[w as usize] == HOP_INF {
                dist[w as usize] = next;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Triangle support of every undirected friendship plus Φ per user.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSupportMap {
    /// Undirected edges `(a, b)` with `a < b`, sorted.
    edges: Vec<(UserId, UserId)>,
    support: Vec<u32>,
    phi: Vec<u32>,
}

impl EdgeSupportMap {
    pub fn support(&self, a: UserId, b: UserId) -> Option<u32> {
        let key = (a.min(b), a.max(b));
        self.edges.binary_search(&key).ok().map(|i| self.support[i])
    }

    pub fn phi(&self, u: UserId) -> u32 {
        self.phi[u as usize]
    }

    pub fn phis(&self) -> &[u32] {
        &self.phi
    }

    pub fn iter(&self) -> impl Iterator<Item = ((UserId, UserId), u32)> + '_ {
        self.edges.iter().copied().zip(self.support.iter().copied())
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

/// Degree-ordered merge triangle counting, O(|E|^1.5).
pub fn compute_supports(net: &SocialNetwork) -> EdgeSupportMap {
    let m = net.user_count();
    let rank = |u: UserId| (net.friends(u).len(), u);
    // forward adjacency: neighbors of higher rank, sorted by id
    let forward: Vec<Vec<UserId>> = (0..m as UserId)
        .map(|u| {
            net.friends(u)
                .iter()
                .copied()
                .filter(|&v| rank(v) > rank(u))
                .collect()
        })
        .collect();
    let mut edges: Vec<(UserId, UserId)> = (0..m as UserId)
        .flat_map(|u| net.friends(u).iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
        .collect();
    edges.sort_unstable();
    let mut support = vec![0u32; edges.len()];
    let idx = |a: UserId, b: UserId| edges.binary_search(&(a.min(b), a.max(b))).unwrap();
    let mut bumps = Vec::new();
    for u in 0..m as UserId {
        for &v in &forward[u as usize] {
            let (a, b) = (&forward[u as usize], &forward[v as usize]);
            let (mut i, mut j) = (0, 0);
            while i < a.len() && j < b.len() {
                match a[i].cmp(&b[j]) {
                    Ordering::Less => i += 1,
                    Ordering::Greater => j += 1,
                    Ordering::Equal => {
                        bumps.push((u, v));
                        bumps.push((u, a[i]));
                        bumps.push((v, a[i]));
                        i += 1;
                        j += 1;
                    }
                }
            }
        }
    }
    for (a, b) in bumps {
        support[idx(a, b)] += 1;
    }
    let mut phi = vec![0u32; m];
    for (&(a, b), &s) in edges.iter().zip(&support) {
        phi[a as usize] = phi[a as usize].max(s);
        phi[b as usize] = phi[b as usize].max(s);
    }
    EdgeSupportMap {
        edges,
        support,
        phi,
    }
}

/// Maximal set of friendships among `members` in which every edge lies in at
/// least `min_support` triangles of the surviving subgraph.
///
/// `order_seed` shuffles the peel queue; the result does not depend on it.
pub(crate) fn truss_edges(
    net: &SocialNetwork,
    members: &[bool],
    min_support: u32,
    order_seed: Option<u64>,
) -> Vec<(UserId, UserId)> {
    let mut edges = Vec::new();
    for u in 0..net.user_count() as UserId {
        if !members[u as usize] {
            continue;
        }
        for &v in net.friends(u) {
            if v > u && members[v as usize] {
                edges.push((u, v));
            }
        }
    }
    if min_support == 0 {
        return edges;
    }
    let index: HashMap<(UserId, UserId), usize> =
        edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let mut local: HashMap<UserId, Vec<UserId>> = HashMap::new();
    for &(a, b) in &edges {
        local.entry(a).or_default().push(b);
        local.entry(b).or_default().push(a);
    }
    for list in local.values_mut() {
        list.sort_unstable();
    }
    let common = |a: UserId, b: UserId| -> Vec<UserId> {
        let (x, y) = (&local[&a], &local[&b]);
        let (mut i, mut j, mut out) = (0, 0, Vec::new());
        while i < x.len() && j < y.len() {
            match x[i].cmp(&y[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    out.push(x[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out
    };
    let key = |a: UserId, b: UserId| index[&(a.min(b), a.max(b))];
    let mut support: Vec<u32> = edges.iter().map(|&(a, b)| common(a, b).len() as u32).collect();
    let mut alive = vec![true; edges.len()];
    let mut queue: Vec<usize> = (0..edges.len()).filter(|&i| support[i] < min_support).collect();
    let mut rng = order_seed.map(ChaCha8Rng::seed_from_u64);
    while !queue.is_empty() {
        if let Some(rng) = rng.as_mut() {
            queue.shuffle(rng);
        }
        let mut next = Vec::new();
        for e in queue {
            if !alive[e] {
                continue;
            }
            alive[e] = false;
            let (a, b) = edges[e];
            for w in common(a, b) {
                let (ea, eb) = (key(a, w), key(b, w));
                if alive[ea] && alive[eb] {
                    for x in [ea, eb] {
                        support[x] -= 1;
                        if support[x] + 1 == min_support {
                            next.push(x);
                        }
                    }
                }
            }
        }
        queue = next;
    }
    edges
        .into_iter()
        .zip(alive)
        .filter_map(|(e, keep)| keep.then_some(e))
        .collect()
}

pub(crate) fn member_mask<'a>(n: usize, members: impl IntoIterator<Item = &'a UserId>) -> Vec<bool> {
    let mut mask = vec![false; n];
    for &u in members {
        mask[u as usize] = true;
    }
    mask
}

/// Peels friendships among `restricted_to` until every survivor has support
/// of at least `k - 2` inside the surviving subgraph.
pub fn truss_peel(
    net: &SocialNetwork,
    restricted_to: &BTreeSet<UserId>,
    k: u32,
) -> BTreeSet<(UserId, UserId)> {
    let mask = member_mask(net.user_count(), restricted_to);
    truss_edges(net, &mask, k.saturating_sub(2), None).into_iter().collect()
}

/// Same as [`truss_peel`] with the peel queue processed in a seeded random
/// order.
pub fn truss_peel_shuffled(
    net: &SocialNetwork,
    restricted_to: &BTreeSet<UserId>,
    k: u32,
    seed: u64,
) -> BTreeSet<(UserId, UserId)> {
    let mask = member_mask(net.user_count(), restricted_to);
    truss_edges(net, &mask, k.saturating_sub(2), Some(seed))
        .into_iter()
        .collect()
}

/// Topic-weighted score `Σ_j tp^j · T^j` of one edge.
pub fn edge_influence(e: &TopicEdge, t: &QueryTopicVector) -> Result<f64> {
    if e.weights.len() != t.len() {
        return Err(Error::TopicLength {
            expected: e.weights.len(),
            got: t.len(),
        });
    }
    Ok(t.fold(&e.weights))
}

/// Scores of all edges for one topic vector, aligned with `net.edges()`.
pub fn edge_scores(net: &SocialNetwork, t: &QueryTopicVector) -> Result<Vec<f64>> {
    net.edges().iter().map(|e| edge_influence(e, t)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Influence exerted by the source on every other user.
    Outgoing,
    /// Influence every other user exerts on the source.
    Incoming,
}

/// Best path product between `source` and every user.
///
/// Runs Dijkstra on `-ln f` edge lengths, dropping `f = 0` edges; with all
/// scores in `[0, 1]` the optimal paths are simple. When `within` is given,
/// paths may only use users inside the mask. The source itself gets 1,
/// unreachable users 0.
pub fn influence_row(
    net: &SocialNetwork,
    scores: &[f64],
    source: UserId,
    direction: Direction,
    within: Option<&[bool]>,
) -> Vec<f64> {
    let m = net.user_count();
    let mut cost = vec![f64::INFINITY; m];
    let mut product = vec![0.0; m];
    cost[source as usize] = 0.0;
    product[source as usize] = 1.0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((Key(0.0), source)));
    while let Some(Reverse((Key(c), u))) = heap.pop() {
        if c > cost[u as usize] {
            continue;
        }
        let adjacent = match direction {
            Direction::Outgoing => net.out_edges(u),
            Direction::Incoming => net.in_edges(u),
        };
        for &(w, e) in adjacent {
            if within.is_some_and(|mask| !mask[w as usize]) {
                continue;
            }
            let f = scores[e as usize];
            if f <= 0.0 {
                continue;
            }
            let nc = c - f.ln();
            if nc < cost[w as usize] {
                cost[w as usize] = nc;
                product[w as usize] = product[u as usize] * f;
                heap.push(Reverse((Key(nc), w)));
            }
        }
    }
    product
}

/// Maximum path product from `u` to `v`, optionally restricted to paths
/// inside `within`.
pub fn influence_score(
    net: &SocialNetwork,
    u: UserId,
    v: UserId,
    t: &QueryTopicVector,
    within: Option<&BTreeSet<UserId>>,
) -> Result<f64> {
    for x in [u, v] {
        if !net.contains(x) {
            return Err(Error::UnknownUser(x));
        }
    }
    if u == v {
        return Err(Error::InvalidArgument("influence score needs two distinct users".into()));
    }
    let scores = edge_scores(net, t)?;
    let mask = match within {
        Some(set) => {
            if !set.contains(&u) || !set.contains(&v) {
                return Err(Error::InvalidArgument(
                    "both endpoints must belong to the restricting set".into(),
                ));
            }
            Some(member_mask(net.user_count(), set))
        }
        None => None,
    };
    let row = influence_row(net, &scores, u, Direction::Outgoing, mask.as_deref());
    Ok(row[v as usize])
}

/// Weakest influence any member of `s` exerts on `v`.
pub fn influence_set_to_user(
    net: &SocialNetwork,
    s: &BTreeSet<UserId>,
    v: UserId,
    t: &QueryTopicVector,
) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::InvalidArgument("empty source set".into()));
    }
    if s.contains(&v) {
        return Err(Error::InvalidArgument("target user belongs to the source set".into()));
    }
    if !net.contains(v) {
        return Err(Error::UnknownUser(v));
    }
    let scores = edge_scores(net, t)?;
    let into_v = influence_row(net, &scores, v, Direction::Incoming, None);
    s.iter()
        .map(|&u| {
            if net.contains(u) {
                Ok(into_v[u as usize])
            } else {
                Err(Error::UnknownUser(u))
            }
        })
        .try_fold(f64::INFINITY, |acc, x| x.map(|x| acc.min(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;
    use crate::network::{KeywordSet, RoadEdge, RoadVertex, User, CheckIn};

    fn path_road() -> RoadNetwork {
        let v = |x| RoadVertex { x, y: 0.0 };
        RoadNetwork::new(
            vec![v(0.0), v(1.0), v(3.0)],
            vec![
                RoadEdge { src: 0, dst: 1, length: 1.0 },
                RoadEdge { src: 1, dst: 2, length: 2.0 },
            ],
        )
    }

    fn social_from_pairs(n: u32, pairs: &[(u32, u32)]) -> SocialNetwork {
        let users = (0..n)
            .map(|id| User {
                id,
                keywords: KeywordSet::new([], 64),
                checkins: vec![CheckIn { road_vertex: 0, timestamp: 0 }],
            })
            .collect();
        let edges = pairs
            .iter()
            .map(|&(src, dst)| TopicEdge { src, dst, weights: vec![1.0] })
            .collect();
        SocialNetwork::new(users, edges, 1)
    }

    #[test]
    fn path_graph_distances() {
        let t = road_shortest_paths(&path_road(), 0).unwrap();
        assert_eq!(t.as_slice(), &[0.0, 1.0, 3.0]);
        assert!(road_shortest_paths(&path_road(), 9).is_err());
    }

    #[test]
    fn avg_dist_two_term_mean() {
        let users = vec![
            User { id: 0, keywords: KeywordSet::new([], 64), checkins: vec![CheckIn { road_vertex: 0, timestamp: 0 }] },
            User {
                id: 1,
                keywords: KeywordSet::new([], 64),
                checkins: vec![CheckIn { road_vertex: 1, timestamp: 0 }, CheckIn { road_vertex: 2, timestamp: 0 }],
            },
            User { id: 2, keywords: KeywordSet::new([], 64), checkins: vec![CheckIn { road_vertex: 0, timestamp: 5 }] },
        ];
        let net = SpatialSocialNetwork::new(path_road(), SocialNetwork::new(users, vec![], 1));
        assert_eq!(avg_dist_rn(&net, 0, 1).unwrap(), 2.0);
        assert_eq!(avg_dist_rn(&net, 1, 0).unwrap(), 2.0);
        assert_eq!(avg_dist_rn(&net, 0, 2).unwrap(), 0.0);
    }

    #[test]
    fn hops_direct_and_isolated() {
        let net = social_from_pairs(4, &[(0, 1), (2, 1)]);
        let h = social_hops(&net, 0).unwrap();
        assert_eq!(h.get(1), 1);
        assert_eq!(h.get(2), 2);
        assert_eq!(h.get(3), HOP_INF);
        let iso = social_hops(&net, 3).unwrap();
        assert!((0..3).all(|u| iso.get(u) == HOP_INF));
    }

    #[test]
    fn triangle_and_k4_supports() {
        let k3 = social_from_pairs(3, &[(0, 1), (1, 2), (2, 0)]);
        let s = compute_supports(&k3);
        assert!(s.iter().all(|(_, c)| c == 1));
        assert_eq!(s.phis(), &[1, 1, 1]);

        let k4 = social_from_pairs(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (3, 0)]);
        let s = compute_supports(&k4);
        assert_eq!(s.edge_count(), 6);
        assert!(s.iter().all(|(_, c)| c == 2));
    }

    #[test]
    fn phi_of_pendant_is_zero() {
        let net = social_from_pairs(4, &[(0, 1), (1, 2), (2, 0), (3, 0)]);
        let s = compute_supports(&net);
        assert_eq!(s.phi(3), 0);
        assert_eq!(s.phi(0), 1);
    }

    #[test]
    fn k4_truss() {
        let k4 = social_from_pairs(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let all: BTreeSet<u32> = (0..4).collect();
        assert_eq!(truss_peel(&k4, &all, 4).len(), 6);
        assert!(truss_peel(&k4, &all, 5).is_empty());
        // restricting to three vertices leaves a triangle
        let three: BTreeSet<u32> = (0..3).collect();
        assert_eq!(truss_peel(&k4, &three, 3).len(), 3);
        assert!(truss_peel(&k4, &three, 4).is_empty());
    }

    #[test]
    fn edge_influence_examples() {
        let e = TopicEdge { src: 2, dst: 4, weights: vec![0.6, 0.7] };
        let tech = QueryTopicVector::one_hot(2, fixture::TECHNOLOGY);
        assert!((edge_influence(&e, &tech).unwrap() - 0.7).abs() < 1e-12);
        let e = TopicEdge { src: 0, dst: 1, weights: vec![0.4, 0.8] };
        assert!((edge_influence(&e, &QueryTopicVector::uniform(2)).unwrap() - 0.6).abs() < 1e-12);
        let z = TopicEdge { src: 0, dst: 1, weights: vec![0.0, 0.0] };
        assert_eq!(edge_influence(&z, &QueryTopicVector::new(vec![0.3, 0.7]).unwrap()).unwrap(), 0.0);
        assert!(edge_influence(&z, &QueryTopicVector::uniform(3)).is_err());
    }

    fn weighted(n: u32, edges: &[(u32, u32, f64)]) -> SocialNetwork {
        let users = (0..n)
            .map(|id| User {
                id,
                keywords: KeywordSet::new([], 64),
                checkins: vec![CheckIn { road_vertex: 0, timestamp: 0 }],
            })
            .collect();
        let edges = edges
            .iter()
            .map(|&(src, dst, w)| TopicEdge { src, dst, weights: vec![w] })
            .collect();
        SocialNetwork::new(users, edges, 1)
    }

    #[test]
    fn influence_prefers_stronger_chain() {
        let t = QueryTopicVector::uniform(1);
        let net = weighted(3, &[(0, 2, 0.7)]);
        assert!((influence_score(&net, 0, 2, &t, None).unwrap() - 0.7).abs() < 1e-12);
        let net = weighted(3, &[(0, 1, 0.9), (1, 2, 0.9), (0, 2, 0.1)]);
        assert!((influence_score(&net, 0, 2, &t, None).unwrap() - 0.81).abs() < 1e-12);
        // restricted to {0, 2}, only the weak direct edge remains
        let within = BTreeSet::from([0, 2]);
        assert!((influence_score(&net, 0, 2, &t, Some(&within)).unwrap() - 0.1).abs() < 1e-12);
        // against the edge direction nothing flows
        assert_eq!(influence_score(&net, 2, 0, &t, None).unwrap(), 0.0);
    }

    #[test]
    fn set_to_user_influence() {
        let t = QueryTopicVector::uniform(1);
        let net = weighted(4, &[(0, 1, 0.9), (1, 2, 0.5), (0, 2, 0.3)]);
        let single = influence_set_to_user(&net, &BTreeSet::from([0]), 2, &t).unwrap();
        assert!((single - influence_score(&net, 0, 2, &t, None).unwrap()).abs() < 1e-12);
        let pair = influence_set_to_user(&net, &BTreeSet::from([0, 1]), 2, &t).unwrap();
        assert!((pair - 0.45).abs() < 1e-12);
        assert_eq!(influence_set_to_user(&net, &BTreeSet::from([0, 3]), 2, &t).unwrap(), 0.0);
        assert!(influence_set_to_user(&net, &BTreeSet::new(), 2, &t).is_err());
    }
}
