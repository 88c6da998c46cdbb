//! Query processing: best-first index traversal, candidate refinement and
//! batch answering.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, HashMap, VecDeque};
use std::time::Instant;

use serde::Serialize;

use crate::checker::{check_community, Certificate};
use crate::error::{Error, Result};
use crate::index::{NodeContent, NodeId, SocialSpatialIndex};
use crate::metrics::{bfs_row, dijkstra_row, edge_scores, influence_row, member_mask, truss_edges, Direction};
use crate::network::{keyword_overlap, QuerySpec, SpatialSocialNetwork, UserId, VertexId};
use crate::prune::{hop_within, BoundsContext, PruneMode, RuleSet};

/// A returned member set with its independently computed certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Community {
    /// Sorted ascending; always contains q.
    pub members: Vec<UserId>,
    pub valid: bool,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct QueryStats {
    /// Wall-clock nanoseconds spent answering.
    pub cpu_nanos: u64,
    /// Index nodes (or, for the index-free baseline, users) visited.
    pub nodes_visited: u64,
    /// Candidate users surviving pruning, q included.
    pub candidates: u64,
    pub peel_iterations: u64,
    pub result_size: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct QueryOptions {
    pub mode: PruneMode,
    pub rules: RuleSet,
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

/// Candidate sets of one shared traversal plus the number of nodes popped.
#[derive(Debug, Clone, PartialEq)]
pub struct Traversal {
    pub candidates: Vec<Vec<UserId>>,
    pub nodes_visited: u64,
    /// Spatial keys in pop order.
    pub popped_keys: Vec<f64>,
}

/// One best-first walk of the index serving every query in `queries`.
///
/// A node stays alive for a query until one of that query's rules prunes it;
/// a node is expanded while it is alive for at least one query, keyed by the
/// smallest spatial lower bound among those queries.
pub fn traverse(
    net: &SpatialSocialNetwork,
    idx: &SocialSpatialIndex,
    queries: &[QuerySpec],
    opts: QueryOptions,
) -> Result<Traversal> {
    if queries.is_empty() {
        return Err(Error::InvalidArgument("empty query batch".into()));
    }
    let ctxs = queries
        .iter()
        .enumerate()
        .map(|(i, q)| {
            BoundsContext::new(net, idx, q, opts.mode, opts.rules).map_err(|e| Error::BatchQuery {
                index: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_sigma = queries.iter().map(|q| q.sigma).fold(f64::NEG_INFINITY, f64::max);
    let mut candidates: Vec<Vec<UserId>> = queries.iter().map(|q| vec![q.q]).collect();
    let mut alive: HashMap<NodeId, Vec<usize>> = HashMap::new();
    let mut heap = BinaryHeap::new();
    let root = idx.node(idx.root());
    let key = ctxs.iter().map(|c| c.node_spatial_lb(root)).fold(f64::INFINITY, f64::min);
    alive.insert(root.id, (0..queries.len()).collect());
    heap.push(Reverse((Key(key), root.id)));
    let mut visited = 0u64;
    let mut popped_keys = Vec::new();
    while let Some(Reverse((Key(key), id))) = heap.pop() {
        if opts.rules.spatial && key > max_sigma {
            break;
        }
        visited += 1;
        popped_keys.push(key);
        let live = alive.remove(&id).expect("queued node has alive queries");
        match &idx.node(id).content {
            NodeContent::Leaf(entries) => {
                for e in entries {
                    for &i in &live {
                        if e.user != queries[i].q && ctxs[i].user_prune(e.user).is_none() {
                            candidates[i].push(e.user);
                        }
                    }
                }
            }
            NodeContent::Inner(children) => {
                for &c in children {
                    let child = idx.node(c);
                    let keep: Vec<usize> = live
                        .iter()
                        .copied()
                        .filter(|&i| ctxs[i].node_prune(child).is_none())
                        .collect();
                    if keep.is_empty() {
                        continue;
                    }
                    let key = keep
                        .iter()
                        .map(|&i| ctxs[i].node_spatial_lb(child))
                        .fold(f64::INFINITY, f64::min);
                    alive.insert(c, keep);
                    heap.push(Reverse((Key(key), c)));
                }
            }
        }
    }
    for c in &mut candidates {
        c.sort_unstable();
        c.dedup();
    }
    Ok(Traversal {
        candidates,
        nodes_visited: visited,
        popped_keys,
    })
}

/// Candidate users for one query (always containing q) and the number of
/// nodes visited.
pub fn collect_candidates(
    net: &SpatialSocialNetwork,
    idx: &SocialSpatialIndex,
    query: &QuerySpec,
    opts: QueryOptions,
) -> Result<(Vec<UserId>, u64)> {
    let t = traverse(net, idx, std::slice::from_ref(query), opts).map_err(unwrap_batch)?;
    Ok((t.candidates.into_iter().next().unwrap(), t.nodes_visited))
}

fn unwrap_batch(e: Error) -> Error {
    match e {
        Error::BatchQuery { source, .. } => *source,
        e => e,
    }
}

/// Exact metrics memoized over one refinement.
struct Metrics<'a> {
    net: &'a SpatialSocialNetwork,
    query: &'a QuerySpec,
    scores: Vec<f64>,
    road_rows: HashMap<VertexId, Vec<f64>>,
    hop_rows: HashMap<UserId, Vec<u32>>,
    avg: HashMap<(UserId, UserId), f64>,
}

impl<'a> Metrics<'a> {
    fn new(net: &'a SpatialSocialNetwork, query: &'a QuerySpec) -> Result<Self> {
        Ok(Metrics {
            net,
            query,
            scores: edge_scores(&net.social, &query.topics)?,
            road_rows: HashMap::new(),
            hop_rows: HashMap::new(),
            avg: HashMap::new(),
        })
    }

    fn avg_dist(&mut self, u: UserId, v: UserId) -> f64 {
        let key = (u.min(v), u.max(v));
        if let Some(&d) = self.avg.get(&key) {
            return d;
        }
        let net = self.net;
        let (a, b) = (&net.user(key.0).checkins, &net.user(key.1).checkins);
        let mut total = 0.0;
        for c in a {
            let row = self
                .road_rows
                .entry(c.road_vertex)
                .or_insert_with(|| dijkstra_row(&net.road, c.road_vertex));
            total += b.iter().map(|x| row[x.road_vertex as usize]).sum::<f64>();
        }
        let d = total / (a.len() * b.len()) as f64;
        self.avg.insert(key, d);
        d
    }

    fn hops(&mut self, u: UserId, v: UserId) -> u32 {
        let net = self.net;
        if let Some(row) = self.hop_rows.get(&v) {
            return row[u as usize];
        }
        self.hop_rows.entry(u).or_insert_with(|| bfs_row(&net.social, u))[v as usize]
    }

    fn pair_ok(&mut self, u: UserId, v: UserId) -> bool {
        self.avg_dist(u, v) < self.query.sigma && hop_within(self.hops(u, v), self.query.d)
    }

    fn influence(&self, s: &BTreeSet<UserId>, source: UserId, dir: Direction) -> Vec<f64> {
        let mask = member_mask(self.net.user_count(), s);
        influence_row(&self.net.social, &self.scores, source, dir, Some(&mask))
    }

    /// Members of `s` reachable from q over the truss edges of `s`.
    fn truss_component(&self, s: &BTreeSet<UserId>) -> BTreeSet<UserId> {
        let mask = member_mask(self.net.user_count(), s);
        let edges = truss_edges(&self.net.social, &mask, self.query.min_support(), None);
        let mut adj: HashMap<UserId, Vec<UserId>> = HashMap::new();
        for (a, b) in edges {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        let mut seen = BTreeSet::from([self.query.q]);
        let mut queue = VecDeque::from([self.query.q]);
        while let Some(u) = queue.pop_front() {
            for &w in adj.get(&u).into_iter().flatten() {
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    /// Largest subset of `s` closed under the q-relative monotone
    /// conditions: mutual influence with q inside the set and membership in
    /// q's truss component.
    fn fixpoint(&self, mut s: BTreeSet<UserId>, iterations: &mut u64) -> BTreeSet<UserId> {
        let q = self.query.q;
        loop {
            *iterations += 1;
            let out = self.influence(&s, q, Direction::Outgoing);
            let inn = self.influence(&s, q, Direction::Incoming);
            let theta = self.query.theta;
            let kept: BTreeSet<UserId> = s
                .iter()
                .copied()
                .filter(|&u| u == q || (out[u as usize] >= theta && inn[u as usize] >= theta))
                .collect();
            let kept = self.truss_component(&kept);
            if kept == s {
                return s;
            }
            s = kept;
        }
    }

    /// Per-member count of violated pairwise constraints among non-q pairs.
    fn violations(&mut self, s: &BTreeSet<UserId>) -> HashMap<UserId, u32> {
        let q = self.query.q;
        let theta = self.query.theta;
        let others: Vec<UserId> = s.iter().copied().filter(|&u| u != q).collect();
        let rows: HashMap<UserId, Vec<f64>> = others
            .iter()
            .map(|&u| (u, self.influence(s, u, Direction::Outgoing)))
            .collect();
        let mut count = HashMap::new();
        for (i, &u) in others.iter().enumerate() {
            for &v in &others[i + 1..] {
                let bad = !self.pair_ok(u, v)
                    || rows[&u][v as usize] < theta
                    || rows[&v][u as usize] < theta;
                if bad {
                    *count.entry(u).or_insert(0) += 1;
                    *count.entry(v).or_insert(0) += 1;
                }
            }
        }
        count
    }

    /// Engine-side validity of a member set.
    fn is_valid(&mut self, s: &BTreeSet<UserId>) -> bool {
        let q = self.query.q;
        if !s.contains(&q) || s.iter().any(|&u| !keyword_overlap(&self.net.user(u).keywords, &self.query.keywords)) {
            return false;
        }
        let list: Vec<UserId> = s.iter().copied().collect();
        for (i, &u) in list.iter().enumerate() {
            for &v in &list[i + 1..] {
                if !self.pair_ok(u, v) {
                    return false;
                }
            }
        }
        for &u in &list {
            let row = self.influence(s, u, Direction::Outgoing);
            if list.iter().any(|&v| v != u && row[v as usize] < self.query.theta) {
                return false;
            }
        }
        if list.len() == 1 {
            return self.query.k <= 2;
        }
        self.truss_component(s).len() == s.len()
    }
}

/// Engine-side validity test, independent of [`check_community`].
pub fn subset_is_valid(net: &SpatialSocialNetwork, query: &QuerySpec, members: &BTreeSet<UserId>) -> Result<bool> {
    query.validate(net)?;
    Ok(Metrics::new(net, query)?.is_valid(members))
}

/// Largest subset of `pool` whose union with `base` passes `valid`, found by
/// exhaustive search when the pool is small and by add-one growth otherwise.
fn best_extension(
    m: &mut Metrics,
    base: &BTreeSet<UserId>,
    pool: &[UserId],
    exhaustive_limit: usize,
) -> BTreeSet<UserId> {
    if pool.is_empty() {
        return BTreeSet::new();
    }
    if pool.len() > exhaustive_limit {
        let mut grown = base.clone();
        let mut added = BTreeSet::new();
        loop {
            let next = pool.iter().copied().find(|&x| {
                if grown.contains(&x) {
                    return false;
                }
                let mut trial = grown.clone();
                trial.insert(x);
                m.is_valid(&trial)
            });
            match next {
                Some(x) => {
                    grown.insert(x);
                    added.insert(x);
                }
                None => return added,
            }
        }
    }
    let n = pool.len();
    let compatible: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| i == j || m.pair_ok(pool[i], pool[j])).collect())
        .collect();
    for size in (1..=n).rev() {
        let mut pick: Vec<usize> = (0..size).collect();
        loop {
            let pairwise = pick
                .iter()
                .enumerate()
                .all(|(a, &i)| pick[a + 1..].iter().all(|&j| compatible[i][j]));
            if pairwise {
                let mut trial = base.clone();
                trial.extend(pick.iter().map(|&i| pool[i]));
                if m.is_valid(&trial) {
                    return pick.iter().map(|&i| pool[i]).collect();
                }
            }
            // next combination in lexicographic order
            let mut i = size;
            while i > 0 && pick[i - 1] == n - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            pick[i - 1] += 1;
            for j in i..size {
                pick[j] = pick[j - 1] + 1;
            }
        }
    }
    BTreeSet::new()
}

/// Pool size up to which the maximality pass searches exhaustively.
const EXHAUSTIVE_EXTENSION: usize = 16;

/// Peels `candidates` down to a community for `query`.
///
/// 1. Drop users failing keywords, `avg_dist(q, ·) < σ` or `hops(q, ·) < d`.
/// 2. Greatest fixpoint of: mutual influence with q inside the set, and
///    membership in q's connected component of the truss at `k`.
/// 3. While some non-q pair violates a pairwise constraint, remove the
///    member with the most violations (ties: larger id) and redo step 2.
/// 4. Extend the result by the largest valid addition from the step-2 set.
pub fn refine(
    net: &SpatialSocialNetwork,
    candidates: &[UserId],
    query: &QuerySpec,
) -> Result<(Community, QueryStats)> {
    query.validate(net)?;
    let q = query.q;
    let mut m = Metrics::new(net, query)?;
    let mut stats = QueryStats::default();
    let q_ok = keyword_overlap(&net.user(q).keywords, &query.keywords);
    let mut s = BTreeSet::from([q]);
    if q_ok {
        for &u in candidates {
            if u != q
                && net.social.contains(u)
                && keyword_overlap(&net.user(u).keywords, &query.keywords)
                && m.pair_ok(q, u)
            {
                s.insert(u);
            }
        }
    }
    let closure = m.fixpoint(s, &mut stats.peel_iterations);
    let mut current = closure.clone();
    loop {
        let counts = m.violations(&current);
        let Some((&worst, _)) = counts.iter().max_by_key(|&(&u, &c)| (c, u)) else {
            break;
        };
        current.remove(&worst);
        current = m.fixpoint(current, &mut stats.peel_iterations);
    }
    if q_ok {
        let pool: Vec<UserId> = closure
            .difference(&current)
            .copied()
            .filter(|&x| current.iter().all(|&r| m.pair_ok(x, r)))
            .collect();
        let extra = best_extension(&mut m, &current, &pool, EXHAUSTIVE_EXTENSION);
        current.extend(extra);
    }
    let certificate = check_community(net, query, &current);
    stats.result_size = current.len() as u64;
    Ok((
        Community {
            members: current.into_iter().collect(),
            valid: certificate.valid,
            certificate,
        },
        stats,
    ))
}

/// Traverses the index, refines the candidates and reports statistics.
pub fn answer_query(
    net: &SpatialSocialNetwork,
    idx: &SocialSpatialIndex,
    query: &QuerySpec,
) -> Result<(Community, QueryStats)> {
    answer_query_with(net, idx, query, QueryOptions::default())
}

pub fn answer_query_with(
    net: &SpatialSocialNetwork,
    idx: &SocialSpatialIndex,
    query: &QuerySpec,
    opts: QueryOptions,
) -> Result<(Community, QueryStats)> {
    let start = Instant::now();
    let (candidates, visited) = collect_candidates(net, idx, query, opts)?;
    let (community, mut stats) = refine(net, &candidates, query)?;
    stats.nodes_visited = visited;
    stats.candidates = candidates.len() as u64;
    stats.cpu_nanos = start.elapsed().as_nanos() as u64;
    Ok((community, stats))
}

/// Answers all queries with a single shared traversal. Every result equals
/// the standalone answer; `nodes_visited` is the shared count.
pub fn answer_batch(
    net: &SpatialSocialNetwork,
    idx: &SocialSpatialIndex,
    queries: &[QuerySpec],
    opts: QueryOptions,
) -> Result<Vec<(Community, QueryStats)>> {
    for (i, q) in queries.iter().enumerate() {
        q.validate(net).map_err(|e| Error::BatchQuery {
            index: i,
            source: Box::new(e),
        })?;
    }
    let start = Instant::now();
    let t = traverse(net, idx, queries, opts)?;
    let shared = start.elapsed().as_nanos() as u64 / queries.len() as u64;
    queries
        .iter()
        .zip(&t.candidates)
        .map(|(q, cands)| {
            let own = Instant::now();
            let (community, mut stats) = refine(net, cands, q)?;
            stats.nodes_visited = t.nodes_visited;
            stats.candidates = cands.len() as u64;
            stats.cpu_nanos = shared + own.elapsed().as_nanos() as u64;
            Ok((community, stats))
        })
        .collect()
}
