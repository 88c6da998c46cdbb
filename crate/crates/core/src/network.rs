//! Spatial-social network data model.
//!
//! A [`SpatialSocialNetwork`] pairs an undirected, weighted [`RoadNetwork`]
//! with a directed, topic-weighted [`SocialNetwork`]. Users check in at road
//! vertices; keywords are integer ids with a hashed bit-vector summary.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type UserId = u32;
pub type VertexId = u32;
pub type KeywordId = u32;

/// Default keyword bit-vector width.
pub const DEFAULT_KEYWORD_BITS: usize = 256;

/// Position of a keyword in a bit-vector of `width` bits (`width` a power of two).
pub fn keyword_bucket(keyword: KeywordId, width: usize) -> usize {
    // splitmix64 finalizer
    let mut z = (keyword as u64).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    (z as usize) & (width - 1)
}

/// Fixed-width bit-vector used as a may-contain filter for keyword sets.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KeywordBits {
    words: Vec<u64>,
}

impl KeywordBits {
    pub fn zeros(width: usize) -> Self {
        assert!(
            width.is_power_of_two() && width >= 64,
            "keyword bit width must be a power of two >= 64"
        );
        KeywordBits {
            words: vec![0; width / 64],
        }
    }

    pub fn from_keywords<'a>(keywords: impl IntoIterator<Item = &'a KeywordId>, width: usize) -> Self {
        let mut bits = Self::zeros(width);
        for &k in keywords {
            bits.set(keyword_bucket(k, width));
        }
        bits
    }

    pub fn from_words(words: Vec<u64>) -> Self {
        KeywordBits { words }
    }

    pub fn width(&self) -> usize {
        self.words.len() * 64
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn set(&mut self, pos: usize) {
        self.words[pos / 64] |= 1 << (pos % 64);
    }

    pub fn get(&self, pos: usize) -> bool {
        self.words[pos / 64] & (1 << (pos % 64)) != 0
    }

    pub fn may_contain(&self, keyword: KeywordId) -> bool {
        self.get(keyword_bucket(keyword, self.width()))
    }

    pub fn union_with(&mut self, other: &KeywordBits) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
    }

    pub fn intersects(&self, other: &KeywordBits) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    /// True when every bit of `other` is also set here.
    pub fn covers(&self, other: &KeywordBits) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| b & !a == 0)
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }
}

impl fmt::Debug for KeywordBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KeywordBits(")?;
        for w in self.words.iter().rev() {
            write!(f, "{w:016x}")?;
        }
        write!(f, ")")
    }
}

/// A user's keyword ids plus their hashed bit summary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordSet {
    ids: BTreeSet<KeywordId>,
    bits: KeywordBits,
}

impl KeywordSet {
    pub fn new(ids: impl IntoIterator<Item = KeywordId>, width: usize) -> Self {
        build_keyword_bits(&ids.into_iter().collect(), width)
    }

    /// Assembles a set from parts without recomputing the bits; used by
    /// validation tests that need an inconsistent set.
    pub fn from_parts(ids: BTreeSet<KeywordId>, bits: KeywordBits) -> Self {
        KeywordSet { ids, bits }
    }

    pub fn ids(&self) -> &BTreeSet<KeywordId> {
        &self.ids
    }

    pub fn bits(&self) -> &KeywordBits {
        &self.bits
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

pub fn build_keyword_bits(keywords: &BTreeSet<KeywordId>, width: usize) -> KeywordSet {
    KeywordSet {
        bits: KeywordBits::from_keywords(keywords, width),
        ids: keywords.clone(),
    }
}

/// Exact test for `a ∩ b ≠ ∅`; the bit-vector rejects most misses before
/// the id set is consulted.
pub fn keyword_overlap(a: &KeywordSet, b: &BTreeSet<KeywordId>) -> bool {
    b.iter()
        .any(|k| a.bits.may_contain(*k) && a.ids.contains(k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoadVertex {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoadEdge {
    pub src: VertexId,
    pub dst: VertexId,
    pub length: f64,
}

/// Undirected road graph. Vertex ids are positions in `vertices`.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    vertices: Vec<RoadVertex>,
    edges: Vec<RoadEdge>,
    adj: Vec<Vec<(VertexId, f64)>>,
}

impl PartialEq for RoadNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.edges == other.edges
    }
}

impl RoadNetwork {
    /// Builds adjacency lists. Edges with out-of-range endpoints are kept in
    /// the edge list (so validation can report them) but left out of adjacency.
    pub fn new(vertices: Vec<RoadVertex>, edges: Vec<RoadEdge>) -> Self {
        let n = vertices.len();
        let mut adj = vec![Vec::new(); n];
        for e in &edges {
            let (a, b) = (e.src as usize, e.dst as usize);
            if a < n && b < n && a != b {
                adj[a].push((e.dst, e.length));
                adj[b].push((e.src, e.length));
            }
        }
        RoadNetwork {
            vertices,
            edges,
            adj,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[RoadVertex] {
        &self.vertices
    }

    pub fn vertex(&self, v: VertexId) -> &RoadVertex {
        &self.vertices[v as usize]
    }

    pub fn edges(&self) -> &[RoadEdge] {
        &self.edges
    }

    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, f64)] {
        &self.adj[v as usize]
    }

    pub fn contains(&self, v: VertexId) -> bool {
        (v as usize) < self.vertices.len()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.vertices.len();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &(w, _) in &self.adj[v] {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    count += 1;
                    queue.push_back(w as usize);
                }
            }
        }
        count == n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckIn {
    pub road_vertex: VertexId,
    /// Epoch seconds. Stored and round-tripped, never interpreted.
    pub timestamp: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct User {
    pub id: UserId,
    pub keywords: KeywordSet,
    pub checkins: Vec<CheckIn>,
}

/// Directed social edge carrying one influence probability per topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicEdge {
    pub src: UserId,
    pub dst: UserId,
    pub weights: Vec<f64>,
}

/// Directed social graph with per-topic edge weights.
#[derive(Debug, Clone)]
pub struct SocialNetwork {
    users: Vec<User>,
    edges: Vec<TopicEdge>,
    topic_count: usize,
    /// (neighbor, edge index)
    out_adj: Vec<Vec<(UserId, u32)>>,
    in_adj: Vec<Vec<(UserId, u32)>>,
    /// Sorted, deduplicated friends ignoring direction.
    undirected: Vec<Vec<UserId>>,
}

impl PartialEq for SocialNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.users == other.users
            && self.edges == other.edges
            && self.topic_count == other.topic_count
    }
}

impl SocialNetwork {
    pub fn new(users: Vec<User>, edges: Vec<TopicEdge>, topic_count: usize) -> Self {
        let m = users.len();
        let mut out_adj = vec![Vec::new(); m];
        let mut in_adj = vec![Vec::new(); m];
        let mut undirected = vec![Vec::new(); m];
        for (i, e) in edges.iter().enumerate() {
            let (a, b) = (e.src as usize, e.dst as usize);
            if a < m && b < m && a != b {
                out_adj[a].push((e.dst, i as u32));
                in_adj[b].push((e.src, i as u32));
                undirected[a].push(e.dst);
                undirected[b].push(e.src);
            }
        }
        for list in &mut undirected {
            list.sort_unstable();
            list.dedup();
        }
        for list in out_adj.iter_mut().chain(in_adj.iter_mut()) {
            list.sort_unstable();
        }
        SocialNetwork {
            users,
            edges,
            topic_count,
            out_adj,
            in_adj,
            undirected,
        }
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn users(&self) -> &[User] {
        &self.users
    }

    pub fn user(&self, u: UserId) -> &User {
        &self.users[u as usize]
    }

    pub fn contains(&self, u: UserId) -> bool {
        (u as usize) < self.users.len()
    }

    pub fn edges(&self) -> &[TopicEdge] {
        &self.edges
    }

    pub fn edge(&self, idx: u32) -> &TopicEdge {
        &self.edges[idx as usize]
    }

    pub fn topic_count(&self) -> usize {
        self.topic_count
    }

    /// Outgoing `(dst, edge index)` pairs, sorted by `dst`.
    pub fn out_edges(&self, u: UserId) -> &[(UserId, u32)] {
        &self.out_adj[u as usize]
    }

    /// Incoming `(src, edge index)` pairs, sorted by `src`.
    pub fn in_edges(&self, u: UserId) -> &[(UserId, u32)] {
        &self.in_adj[u as usize]
    }

    /// Friends of `u` regardless of edge direction, sorted.
    pub fn friends(&self, u: UserId) -> &[UserId] {
        &self.undirected[u as usize]
    }

    pub fn are_friends(&self, u: UserId, v: UserId) -> bool {
        self.undirected[u as usize].binary_search(&v).is_ok()
    }

    /// Index of the directed edge `u → v`, if present.
    pub fn find_edge(&self, u: UserId, v: UserId) -> Option<u32> {
        let out = &self.out_adj[u as usize];
        out.binary_search_by_key(&v, |&(w, _)| w)
            .ok()
            .map(|i| out[i].1)
    }
}

/// Road network plus social network, joined through user check-ins.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialSocialNetwork {
    pub road: RoadNetwork,
    pub social: SocialNetwork,
}

impl SpatialSocialNetwork {
    pub fn new(road: RoadNetwork, social: SocialNetwork) -> Self {
        SpatialSocialNetwork { road, social }
    }

    pub fn user_count(&self) -> usize {
        self.social.user_count()
    }

    pub fn user(&self, u: UserId) -> &User {
        self.social.user(u)
    }

    pub fn topic_count(&self) -> usize {
        self.social.topic_count()
    }

    pub fn keyword_width(&self) -> usize {
        self.social
            .users()
            .first()
            .map_or(DEFAULT_KEYWORD_BITS, |u| u.keywords.bits().width())
    }
}

/// Query topic weights, normalized to sum to one so every per-edge score
/// stays inside `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryTopicVector {
    weights: Vec<f64>,
}

impl QueryTopicVector {
    /// Normalizes `weights` to unit sum.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidTopics("empty topic vector".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidTopics(
                "topic weights must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidTopics("topic weights sum to zero".into()));
        }
        Ok(QueryTopicVector {
            weights: weights.into_iter().map(|w| w / sum).collect(),
        })
    }

    pub fn uniform(topics: usize) -> Self {
        QueryTopicVector {
            weights: vec![1.0 / topics as f64; topics],
        }
    }

    pub fn one_hot(topics: usize, topic: usize) -> Self {
        let mut weights = vec![0.0; topics];
        weights[topic] = 1.0;
        QueryTopicVector { weights }
    }

    /// Uniform weight over the first `active` of `topics` topics.
    pub fn prefix(topics: usize, active: usize) -> Self {
        let active = active.clamp(1, topics);
        let mut weights = vec![0.0; topics];
        for w in weights.iter_mut().take(active) {
            *w = 1.0 / active as f64;
        }
        QueryTopicVector { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Dot product with a per-topic vector of the same length.
    pub fn fold(&self, per_topic: &[f64]) -> f64 {
        per_topic
            .iter()
            .zip(&self.weights)
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// A community search request: query user, topics, keywords and thresholds.
///
/// `d == u32::MAX` and `sigma == f64::INFINITY` disable the respective
/// distance constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub q: UserId,
    pub topics: QueryTopicVector,
    pub keywords: BTreeSet<KeywordId>,
    pub k: u32,
    pub d: u32,
    pub sigma: f64,
    pub theta: f64,
}

impl QuerySpec {
    pub fn validate(&self, net: &SpatialSocialNetwork) -> Result<()> {
        if !net.social.contains(self.q) {
            return Err(Error::UnknownUser(self.q));
        }
        if self.topics.len() != net.topic_count() {
            return Err(Error::TopicLength {
                expected: net.topic_count(),
                got: self.topics.len(),
            });
        }
        if self.k < 2 {
            return Err(Error::InvalidQuery(format!("k must be >= 2, got {}", self.k)));
        }
        if self.d < 1 {
            return Err(Error::InvalidQuery("d must be >= 1".into()));
        }
        if self.sigma.is_nan() || self.sigma < 0.0 {
            return Err(Error::InvalidQuery(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::InvalidQuery(format!(
                "theta must lie in [0, 1], got {}",
                self.theta
            )));
        }
        Ok(())
    }

    /// Minimum triangle support required of community edges.
    pub fn min_support(&self) -> u32 {
        self.k.saturating_sub(2)
    }
}

/// One broken invariant found by [`validate_network`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub entity: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.rule)
    }
}

/// Checks every model invariant and reports violations as data.
pub fn validate_network(net: &SpatialSocialNetwork) -> Vec<Violation> {
    let mut report = Vec::new();
    let mut push = |entity: String, rule: &str| {
        report.push(Violation {
            entity,
            rule: rule.to_string(),
        })
    };

    let road = &net.road;
    let n = road.vertex_count();
    if n == 0 {
        push("road".into(), "road network has no vertices");
    }
    for (i, v) in road.vertices().iter().enumerate() {
        if !v.x.is_finite() || !v.y.is_finite() {
            push(format!("road vertex {i}"), "non-finite coordinate");
        }
    }
    let mut pairs = HashSet::new();
    let mut endpoints_ok = true;
    for (i, e) in road.edges().iter().enumerate() {
        let name = format!("road edge {i} ({}-{})", e.src, e.dst);
        if e.src as usize >= n || e.dst as usize >= n {
            push(name, "endpoint is not a road vertex");
            endpoints_ok = false;
            continue;
        }
        if e.src == e.dst {
            push(name.clone(), "self-loop");
        }
        if !(e.length.is_finite() && e.length > 0.0) {
            push(name.clone(), "edge length must be strictly positive");
        }
        if !pairs.insert((e.src.min(e.dst), e.src.max(e.dst))) {
            push(name, "duplicate edge between vertex pair");
        }
    }
    if n > 0 && endpoints_ok && !road.is_connected() {
        push("road".into(), "road network is not connected");
    }

    let social = &net.social;
    let m = social.user_count();
    let topics = social.topic_count();
    if topics == 0 {
        push("social".into(), "topic count must be at least 1");
    }
    for (i, u) in social.users().iter().enumerate() {
        let name = format!("user {i}");
        if u.id as usize != i {
            push(name.clone(), "user ids must be dense 0..M-1 in order");
        }
        if u.checkins.is_empty() {
            push(name.clone(), "empty check-in list");
        }
        for c in &u.checkins {
            if !road.contains(c.road_vertex) {
                push(
                    format!("user {i} check-in at vertex {}", c.road_vertex),
                    "check-in references unknown road vertex",
                );
            }
        }
        let bits = u.keywords.bits();
        if !bits.width().is_power_of_two()
            || KeywordBits::from_keywords(u.keywords.ids(), bits.width()) != *bits
        {
            push(name, "keyword bits do not match keyword ids");
        }
    }
    let mut directed = HashSet::new();
    for (i, e) in social.edges().iter().enumerate() {
        let name = format!("social edge {i} ({}->{})", e.src, e.dst);
        if e.src as usize >= m || e.dst as usize >= m {
            push(name, "endpoint is not a user");
            continue;
        }
        if e.src == e.dst {
            push(name.clone(), "self-loop");
        }
        if !directed.insert((e.src, e.dst)) {
            push(name.clone(), "duplicate directed edge");
        }
        if e.weights.len() != topics {
            push(name.clone(), "weight vector length differs from topic count");
        }
        if e.weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            push(name, "weight out of [0,1]");
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fixture_is_valid() {
        let net = fixture::sample_network();
        assert_eq!(validate_network(&net), vec![]);
        // idempotent
        assert_eq!(validate_network(&net), validate_network(&net));
    }

    #[test]
    fn weight_above_one_is_reported() {
        let net = fixture::sample_network();
        let mut edges = net.social.edges().to_vec();
        edges[0].weights[1] = 1.3;
        let social = SocialNetwork::new(net.social.users().to_vec(), edges, 2);
        let bad = SpatialSocialNetwork::new(net.road.clone(), social);
        let report = validate_network(&bad);
        assert_eq!(report.len(), 1, "{report:?}");
        assert_eq!(report[0].rule, "weight out of [0,1]");
    }

    #[test]
    fn empty_checkins_are_reported() {
        let net = fixture::sample_network();
        let mut users = net.social.users().to_vec();
        users[3].checkins.clear();
        let social = SocialNetwork::new(users, net.social.edges().to_vec(), 2);
        let bad = SpatialSocialNetwork::new(net.road.clone(), social);
        let report = validate_network(&bad);
        assert_eq!(report.len(), 1, "{report:?}");
        assert_eq!(report[0].rule, "empty check-in list");
        assert_eq!(report[0].entity, "user 3");
    }

    #[test]
    fn inconsistent_keyword_bits_are_reported() {
        let net = fixture::sample_network();
        let mut users = net.social.users().to_vec();
        users[1].keywords = KeywordSet::from_parts(
            users[1].keywords.ids().clone(),
            KeywordBits::zeros(DEFAULT_KEYWORD_BITS),
        );
        let social = SocialNetwork::new(users, net.social.edges().to_vec(), 2);
        let report = validate_network(&SpatialSocialNetwork::new(net.road.clone(), social));
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].rule, "keyword bits do not match keyword ids");
    }

    #[test]
    fn disconnected_road_is_reported() {
        let v = |x| RoadVertex { x, y: 0.0 };
        let road = RoadNetwork::new(
            vec![v(0.0), v(1.0), v(2.0)],
            vec![RoadEdge { src: 0, dst: 1, length: 1.0 }],
        );
        let social = SocialNetwork::new(
            vec![User {
                id: 0,
                keywords: KeywordSet::new([], 256),
                checkins: vec![CheckIn { road_vertex: 2, timestamp: 0 }],
            }],
            vec![],
            1,
        );
        let report = validate_network(&SpatialSocialNetwork::new(road, social));
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].rule, "road network is not connected");
    }

    #[test]
    fn empty_keyword_set_has_no_bits() {
        let ks = KeywordSet::new([], 256);
        assert_eq!(ks.bits().count_ones(), 0);
        assert!(!keyword_overlap(&ks, &BTreeSet::from([1, 2, 3])));
    }

    #[test]
    fn single_keyword_sets_one_bit() {
        let ks = KeywordSet::new([7], 256);
        assert_eq!(ks.bits().count_ones(), 1);
        assert!(ks.bits().get(keyword_bucket(7, 256)));
    }

    #[test]
    fn union_bits_equal_or_of_singletons() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let a: KeywordId = rng.random_range(0..10_000);
            let b: KeywordId = rng.random_range(0..10_000);
            let both = KeywordSet::new([a, b], 256);
            let mut or = KeywordSet::new([a], 256).bits().clone();
            or.union_with(KeywordSet::new([b], 256).bits());
            assert_eq!(both.bits(), &or);
        }
    }

    #[test]
    fn overlap_matches_exact_intersection() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let a: BTreeSet<KeywordId> = (0..rng.random_range(0..6)).map(|_| rng.random_range(0..20)).collect();
            let b: BTreeSet<KeywordId> = (0..rng.random_range(0..6)).map(|_| rng.random_range(0..20)).collect();
            let exact = a.intersection(&b).next().is_some();
            assert_eq!(keyword_overlap(&KeywordSet::new(a.iter().copied(), 64), &b), exact);
        }
    }

    #[test]
    fn sample_keyword_overlap() {
        // u5 knows {C++, R}; the query asks for {Java, C++, Python}.
        use fixture::kw;
        let u5 = KeywordSet::new([kw::CPP, kw::R], 256);
        assert!(keyword_overlap(&u5, &BTreeSet::from([kw::JAVA, kw::CPP, kw::PYTHON])));
    }

    #[test]
    fn topic_vector_is_normalized() {
        let t = QueryTopicVector::new(vec![2.0, 6.0]).unwrap();
        assert_eq!(t.weights(), &[0.25, 0.75]);
        assert!(QueryTopicVector::new(vec![0.0, 0.0]).is_err());
        assert!(QueryTopicVector::new(vec![-1.0, 2.0]).is_err());
    }

    #[test]
    fn query_validation_rejects_bad_thresholds() {
        let net = fixture::sample_network();
        let mut q = fixture::sample_query();
        assert!(q.validate(&net).is_ok());
        q.k = 1;
        assert!(q.validate(&net).is_err());
        q = fixture::sample_query();
        q.theta = 1.5;
        assert!(q.validate(&net).is_err());
        q = fixture::sample_query();
        q.q = 99;
        assert!(matches!(q.validate(&net), Err(Error::UnknownUser(99))));
    }
}
