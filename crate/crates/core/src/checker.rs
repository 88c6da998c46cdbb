//! From-scratch community validity checker.
//!
//! Shares no code with the query engine: distances, hops, influence and
//! truss support are recomputed here with deliberately simple algorithms
//! (bit-keyed Dijkstra, plain BFS, Floyd-Warshall over members, full
//! triangle recount per peel round).

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet, VecDeque};

use serde::Serialize;

use crate::network::{QuerySpec, SpatialSocialNetwork, UserId};

/// One requirement of a valid community.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clause {
    ContainsQuery,
    Keywords,
    Truss,
    Connected,
    HopDistance,
    SpatialDistance,
    Influence,
}

/// Evidence for (or against) validity of a member set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub valid: bool,
    pub size: usize,
    /// Largest pairwise average road distance; `None` without pairs.
    pub max_pair_avg_dist: Option<f64>,
    /// Largest pairwise hop distance (`u32::MAX` when unreachable).
    pub max_pair_hops: Option<u32>,
    /// Weakest influence over ordered member pairs, paths inside the set.
    pub min_mutual_influence: Option<f64>,
    /// Smallest support among surviving truss edges; `None` without edges.
    pub min_truss_support: Option<u32>,
    pub truss_edges: usize,
    pub keywords_covered: bool,
    /// Clauses that hold only because there is nothing to check.
    pub vacuous: Vec<Clause>,
    pub failing: Vec<Clause>,
}

fn road_distances(net: &SpatialSocialNetwork, source: u32) -> Vec<f64> {
    // non-negative f64 values order like their bit patterns
    let n = net.road.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source as usize] = 0.0;
    heap.push(Reverse((0f64.to_bits(), source)));
    while let Some(Reverse((_, v))) = heap.pop() {
        if std::mem::replace(&mut done[v as usize], true) {
            continue;
        }
        for e in net.road.neighbors(v) {
            let nd = dist[v as usize] + e.1;
            if nd < dist[e.0 as usize] {
                dist[e.0 as usize] = nd;
                heap.push(Reverse((nd.to_bits(), e.0)));
            }
        }
    }
    dist
}

fn hop_distances(adj: &HashMap<UserId, Vec<UserId>>, source: UserId) -> HashMap<UserId, u32> {
    let mut dist = HashMap::from([(source, 0u32)]);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let du = dist[&u];
        for &w in adj.get(&u).into_iter().flatten() {
            dist.entry(w).or_insert_with(|| {
                queue.push_back(w);
                du + 1
            });
        }
    }
    dist
}

/// Verifies every clause of a valid community for `members` under `query`.
pub fn check_community(
    net: &SpatialSocialNetwork,
    query: &QuerySpec,
    members: &BTreeSet<UserId>,
) -> Certificate {
    let list: Vec<UserId> = members.iter().copied().collect();
    let n = list.len();
    let mut failing = BTreeSet::new();
    let mut vacuous = Vec::new();
    if !members.contains(&query.q) {
        failing.insert(Clause::ContainsQuery);
    }
    if list.iter().any(|&u| !net.social.contains(u)) {
        failing.insert(Clause::ContainsQuery);
        return Certificate {
            valid: false,
            size: n,
            max_pair_avg_dist: None,
            max_pair_hops: None,
            min_mutual_influence: None,
            min_truss_support: None,
            truss_edges: 0,
            keywords_covered: false,
            vacuous,
            failing: failing.into_iter().collect(),
        };
    }

    let keywords_covered = list.iter().all(|&u| {
        net.user(u)
            .keywords
            .ids()
            .intersection(&query.keywords)
            .next()
            .is_some()
    });
    if !keywords_covered {
        failing.insert(Clause::Keywords);
    }

    // friendship graph over all users, ignoring direction
    let mut adj: HashMap<UserId, Vec<UserId>> = HashMap::new();
    for e in net.social.edges() {
        adj.entry(e.src).or_default().push(e.dst);
        adj.entry(e.dst).or_default().push(e.src);
    }

    let mut max_avg: Option<f64> = None;
    let mut max_hops: Option<u32> = None;
    if n < 2 {
        vacuous.extend([Clause::SpatialDistance, Clause::HopDistance, Clause::Influence]);
    }
    let rows: HashMap<u32, Vec<f64>> = list
        .iter()
        .flat_map(|&u| net.user(u).checkins.iter().map(|c| c.road_vertex))
        .collect::<HashSet<_>>()
        .into_iter()
        .map(|v| (v, road_distances(net, v)))
        .collect();
    for (i, &u) in list.iter().enumerate() {
        let hops = hop_distances(&adj, u);
        for &v in &list[i + 1..] {
            let (cu, cv) = (&net.user(u).checkins, &net.user(v).checkins);
            let mut total = 0.0;
            for a in cu {
                for b in cv {
                    total += rows[&a.road_vertex][b.road_vertex as usize];
                }
            }
            let avg = total / (cu.len() * cv.len()) as f64;
            max_avg = Some(max_avg.map_or(avg, |m: f64| m.max(avg)));
            if avg >= query.sigma {
                failing.insert(Clause::SpatialDistance);
            }
            let h = hops.get(&v).copied().unwrap_or(u32::MAX);
            max_hops = Some(max_hops.map_or(h, |m| m.max(h)));
            if query.d != u32::MAX && h >= query.d {
                failing.insert(Clause::HopDistance);
            }
        }
    }

    // max-product influence inside the member set
    let pos: HashMap<UserId, usize> = list.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let mut best = vec![vec![0.0f64; n]; n];
    for e in net.social.edges() {
        if let (Some(&a), Some(&b)) = (pos.get(&e.src), pos.get(&e.dst)) {
            let f: f64 = e.weights.iter().zip(query.topics.weights()).map(|(w, t)| w * t).sum();
            best[a][b] = best[a][b].max(f);
        }
    }
    for m in 0..n {
        for a in 0..n {
            for b in 0..n {
                let via = best[a][m] * best[m][b];
                if a != b && via > best[a][b] {
                    best[a][b] = via;
                }
            }
        }
    }
    let mut min_inf: Option<f64> = None;
    for a in 0..n {
        for b in 0..n {
            if a != b {
                min_inf = Some(min_inf.map_or(best[a][b], |m: f64| m.min(best[a][b])));
                if best[a][b] < query.theta {
                    failing.insert(Clause::Influence);
                }
            }
        }
    }

    // truss: recount every triangle each round and drop weak edges
    let mut edges: BTreeSet<(UserId, UserId)> = net
        .social
        .edges()
        .iter()
        .filter(|e| e.src != e.dst && members.contains(&e.src) && members.contains(&e.dst))
        .map(|e| (e.src.min(e.dst), e.src.max(e.dst)))
        .collect();
    let need = query.k.saturating_sub(2);
    let support = |edges: &BTreeSet<(UserId, UserId)>, (a, b): (UserId, UserId)| {
        list.iter()
            .filter(|&&w| {
                w != a
                    && w != b
                    && edges.contains(&(a.min(w), a.max(w)))
                    && edges.contains(&(b.min(w), b.max(w)))
            })
            .count() as u32
    };
    loop {
        let weak: Vec<(UserId, UserId)> = edges
            .iter()
            .copied()
            .filter(|&e| support(&edges, e) < need)
            .collect();
        if weak.is_empty() {
            break;
        }
        for e in weak {
            edges.remove(&e);
        }
    }
    let min_support = edges.iter().map(|&e| support(&edges, e)).min();
    let touched: HashSet<UserId> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    if query.k >= 3 && list.iter().any(|u| !touched.contains(u)) {
        failing.insert(Clause::Truss);
    }
    if edges.is_empty() && query.k < 3 {
        vacuous.push(Clause::Truss);
    }
    if let Some(&start) = list.first() {
        let mut seen = HashSet::from([start]);
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &(a, b) in &edges {
                let next = if a == u { b } else if b == u { a } else { continue };
                if seen.insert(next) {
                    stack.push(next);
                }
            }
        }
        if seen.len() != n {
            failing.insert(Clause::Connected);
        }
    }

    let failing: Vec<Clause> = failing.into_iter().collect();
    Certificate {
        valid: failing.is_empty(),
        size: n,
        max_pair_avg_dist: max_avg,
        max_pair_hops: max_hops,
        min_mutual_influence: min_inf,
        min_truss_support: min_support,
        truss_edges: edges.len(),
        keywords_covered,
        vacuous,
        failing,
    }
}
