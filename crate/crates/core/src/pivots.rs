//! Pivot selection and pivot distance tables.
//!
//! Three pivot sets are chosen by swap-based local search: road vertices
//! whose distance rows give tight lower bounds on average road distance,
//! users whose hop rows give tight hop lower bounds, and "index" users that
//! seed the leaf partition of the social-spatial index.

use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{bfs_row, compute_supports, dijkstra_row, influence_row, Direction, HOP_INF};
use crate::network::{QueryTopicVector, SpatialSocialNetwork, User, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PivotKind {
    Road,
    Social,
    Index,
}

/// Pivot ids: road vertices for [`PivotKind::Road`], users otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PivotSet {
    pub kind: PivotKind,
    pub pivots: Vec<u32>,
}

impl PivotSet {
    pub fn new(kind: PivotKind, pivots: Vec<u32>) -> Result<Self> {
        if pivots.is_empty() {
            return Err(Error::InvalidArgument("pivot set must not be empty".into()));
        }
        let distinct: HashSet<u32> = pivots.iter().copied().collect();
        if distinct.len() != pivots.len() {
            return Err(Error::InvalidArgument("pivots must be distinct".into()));
        }
        Ok(PivotSet { kind, pivots })
    }

    pub fn len(&self) -> usize {
        self.pivots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pivots.is_empty()
    }
}

/// How users are assigned to index pivots when forming leaf groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PartitionStrategy {
    /// Normalized average road distance plus normalized hop distance.
    #[default]
    SocialSpatial,
    /// Hop distance only.
    Social,
    /// Average road distance only.
    Spatial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PivotSearchConfig {
    pub global_iter: usize,
    pub swap_iter: usize,
    /// Weights of the spatial, structural and influence terms of the
    /// partition cost.
    pub weights: [f64; 3],
    /// User pairs sampled when scoring road and social pivots.
    pub sample_pairs: usize,
    /// Users whose exact rows estimate the partition quality sums.
    pub anchors: usize,
    pub rng_seed: u64,
    /// Minimize the road pivot cost instead of maximizing it.
    pub minimize_road_cost: bool,
}

impl Default for PivotSearchConfig {
    fn default() -> Self {
        PivotSearchConfig {
            global_iter: 5,
            swap_iter: 50,
            weights: [1.0 / 3.0; 3],
            sample_pairs: 2000,
            anchors: 64,
            rng_seed: 0,
            minimize_road_cost: false,
        }
    }
}

impl PivotSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.global_iter == 0 {
            return Err(Error::InvalidConfig("global_iter must be >= 1".into()));
        }
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidConfig("pivot cost weights must be non-negative".into()));
        }
        if (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig("pivot cost weights must sum to 1".into()));
        }
        if self.sample_pairs == 0 || self.anchors == 0 {
            return Err(Error::InvalidConfig("sample_pairs and anchors must be >= 1".into()));
        }
        Ok(())
    }
}

fn mean_over_checkins(user: &User, row: &[f64]) -> f64 {
    user.checkins.iter().map(|c| row[c.road_vertex as usize]).sum::<f64>() / user.checkins.len() as f64
}

/// `A(u)` for every user: mean road distance from u's check-ins to `vertex`.
pub fn road_pivot_row(net: &SpatialSocialNetwork, vertex: u32) -> Result<Vec<f64>> {
    if !net.road.contains(vertex) {
        return Err(Error::UnknownVertex(vertex));
    }
    let row = dijkstra_row(&net.road, vertex);
    Ok(net.social.users().iter().map(|u| mean_over_checkins(u, &row)).collect())
}

/// `avg_dist_rn(v, pivot)` for every user `v`.
pub(crate) fn user_avg_row(net: &SpatialSocialNetwork, pivot: UserId) -> Vec<f64> {
    let checkins = &net.user(pivot).checkins;
    let mut acc = vec![0.0; net.road.vertex_count()];
    for c in checkins {
        for (a, d) in acc.iter_mut().zip(dijkstra_row(&net.road, c.road_vertex)) {
            *a += d;
        }
    }
    let n = checkins.len() as f64;
    for a in &mut acc {
        *a /= n;
    }
    net.social.users().iter().map(|u| mean_over_checkins(u, &acc)).collect()
}

/// Per-user pivot rows: `A_k(u)` for road pivots and hop distance to each
/// social pivot.
#[derive(Debug, Clone, PartialEq)]
pub struct PivotDistanceTables {
    pub l: usize,
    pub h: usize,
    road: Vec<f64>,
    social: Vec<u32>,
}

impl PivotDistanceTables {
    pub fn compute(net: &SpatialSocialNetwork, road: &PivotSet, social: &PivotSet) -> Result<Self> {
        let m = net.user_count();
        let (l, h) = (road.len(), social.len());
        let mut road_table = vec![0.0; m * l];
        for (k, &p) in road.pivots.iter().enumerate() {
            for (u, a) in road_pivot_row(net, p)?.into_iter().enumerate() {
                road_table[u * l + k] = a;
            }
        }
        let mut social_table = vec![0u32; m * h];
        for (k, &p) in social.pivots.iter().enumerate() {
            if !net.social.contains(p) {
                return Err(Error::UnknownUser(p));
            }
            for (u, d) in bfs_row(&net.social, p).into_iter().enumerate() {
                social_table[u * h + k] = d;
            }
        }
        Ok(PivotDistanceTables {
            l,
            h,
            road: road_table,
            social: social_table,
        })
    }

    pub fn road_row(&self, u: UserId) -> &[f64] {
        &self.road[u as usize * self.l..(u as usize + 1) * self.l]
    }

    pub fn social_row(&self, u: UserId) -> &[u32] {
        &self.social[u as usize * self.h..(u as usize + 1) * self.h]
    }
}

/// Up to `budget` distinct unordered user pairs; every pair when that fits.
pub fn sample_pairs(m: usize, budget: usize, seed: u64) -> Vec<(UserId, UserId)> {
    let total = m * m.saturating_sub(1) / 2;
    if total <= budget {
        let mut pairs = Vec::with_capacity(total);
        for u in 0..m as UserId {
            for v in u + 1..m as UserId {
                pairs.push((u, v));
            }
        }
        return pairs;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut pairs = Vec::with_capacity(budget);
    while pairs.len() < budget {
        let u = rng.random_range(0..m as UserId);
        let v = rng.random_range(0..m as UserId);
        if u != v && seen.insert((u.min(v), u.max(v))) {
            pairs.push((u.min(v), u.max(v)));
        }
    }
    pairs
}

fn road_cost_from_rows(rows: &[&[f64]], pairs: &[(UserId, UserId)]) -> f64 {
    pairs
        .iter()
        .map(|&(u, v)| {
            rows.iter()
                .map(|r| (r[u as usize] - r[v as usize]).abs())
                .fold(0.0, f64::max)
        })
        .sum()
}

/// Replaces unreachable hops by one more than the largest finite hop.
fn hop_cap(rows: &[&[u32]]) -> u32 {
    rows.iter()
        .flat_map(|r| r.iter())
        .filter(|&&d| d != HOP_INF)
        .max()
        .map_or(1, |m| m + 1)
}

fn social_cost_from_rows(rows: &[&[u32]], pairs: &[(UserId, UserId)]) -> f64 {
    let cap = hop_cap(rows);
    let capped = |d: u32| if d == HOP_INF { cap } else { d };
    pairs
        .iter()
        .map(|&(u, v)| {
            rows.iter()
                .map(|r| capped(r[u as usize]).abs_diff(capped(r[v as usize])))
                .max()
                .unwrap_or(0) as f64
        })
        .sum()
}

fn expect_kind(set: &PivotSet, kind: PivotKind) -> Result<()> {
    if set.kind != kind {
        return Err(Error::InvalidArgument(format!(
            "expected {kind:?} pivots, got {:?}",
            set.kind
        )));
    }
    Ok(())
}

/// Sum over `pairs` of the tightest pivot lower bound `max_k |A_k(u) - A_k(v)|`.
pub fn cost_road_pivots(
    net: &SpatialSocialNetwork,
    candidate: &PivotSet,
    pairs: &[(UserId, UserId)],
) -> Result<f64> {
    expect_kind(candidate, PivotKind::Road)?;
    let rows = candidate
        .pivots
        .iter()
        .map(|&p| road_pivot_row(net, p))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    Ok(road_cost_from_rows(&refs, pairs))
}

/// Sum over `pairs` of `max_k |hop(u, p_k) - hop(v, p_k)|`, unreachable hops
/// capped at one more than the largest finite hop.
pub fn cost_social_pivots(
    net: &SpatialSocialNetwork,
    candidate: &PivotSet,
    pairs: &[(UserId, UserId)],
) -> Result<f64> {
    expect_kind(candidate, PivotKind::Social)?;
    let mut rows = Vec::new();
    for &p in &candidate.pivots {
        if !net.social.contains(p) {
            return Err(Error::UnknownUser(p));
        }
        rows.push(bfs_row(&net.social, p));
    }
    let refs: Vec<&[u32]> = rows.iter().map(Vec::as_slice).collect();
    Ok(social_cost_from_rows(&refs, pairs))
}

/// Maxima used to scale the two terms of [`quality`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityNormalizers {
    pub max_avg_dist: f64,
    pub max_hops: f64,
}

fn scaled(x: f64, max: f64) -> f64 {
    if max > 0.0 {
        (x / max).min(1.0)
    } else {
        0.0
    }
}

fn quality_terms(avg: f64, hops: u32, norm: &QualityNormalizers, strategy: PartitionStrategy) -> f64 {
    let spatial = scaled(avg, norm.max_avg_dist);
    let social = if hops == HOP_INF {
        1.0
    } else {
        scaled(hops as f64, norm.max_hops)
    };
    match strategy {
        PartitionStrategy::SocialSpatial => spatial + social,
        PartitionStrategy::Social => social,
        PartitionStrategy::Spatial => spatial,
    }
}

/// Normalized road-plus-social distance between user `v` and pivot user `piv`,
/// in `[0, 2]`. Unreachable hop distance counts as the maximum. A pivot has
/// quality 0 with itself even when its check-ins are spread out.
pub fn quality(
    net: &SpatialSocialNetwork,
    v: UserId,
    piv: UserId,
    norm: &QualityNormalizers,
) -> Result<f64> {
    if v == piv {
        return Ok(0.0);
    }
    let avg = crate::metrics::avg_dist_rn(net, v, piv)?;
    let hops = crate::metrics::social_hops(&net.social, piv)?.get(v);
    Ok(quality_terms(avg, hops, norm, PartitionStrategy::SocialSpatial))
}

struct PivotRows {
    avg: Vec<f64>,
    hops: Vec<u32>,
}

impl PivotRows {
    fn compute(net: &SpatialSocialNetwork, pivot: UserId) -> Self {
        PivotRows {
            avg: user_avg_row(net, pivot),
            hops: bfs_row(&net.social, pivot),
        }
    }
}

fn normalizers(rows: &[&PivotRows]) -> QualityNormalizers {
    let max_avg_dist = rows
        .iter()
        .flat_map(|r| r.avg.iter().copied())
        .fold(0.0, f64::max);
    let hop_rows: Vec<&[u32]> = rows.iter().map(|r| r.hops.as_slice()).collect();
    let finite_max = hop_rows
        .iter()
        .flat_map(|r| r.iter())
        .filter(|&&d| d != HOP_INF)
        .max()
        .copied()
        .unwrap_or(0);
    let any_unreachable = hop_rows.iter().any(|r| r.contains(&HOP_INF));
    let max_hops = if any_unreachable { finite_max + 1 } else { finite_max };
    QualityNormalizers {
        max_avg_dist,
        max_hops: max_hops as f64,
    }
}

/// Index of the best pivot for every user; ties go to the smallest index.
fn assign(rows: &[&PivotRows], pivots: &[u32], m: usize, strategy: PartitionStrategy) -> Vec<u32> {
    let norm = normalizers(rows);
    (0..m)
        .map(|v| {
            let mut best = (f64::INFINITY, 0u32);
            for (j, r) in rows.iter().enumerate() {
                let q = if pivots[j] == v as u32 {
                    0.0
                } else {
                    quality_terms(r.avg[v], r.hops[v], &norm, strategy)
                };
                if q < best.0 {
                    best = (q, j as u32);
                }
            }
            best.1
        })
        .collect()
}

fn groups_from_assignment(assignment: &[u32], groups: usize) -> Vec<Vec<UserId>> {
    let mut out = vec![Vec::new(); groups];
    for (u, &g) in assignment.iter().enumerate() {
        out[g as usize].push(u as UserId);
    }
    out
}

/// Assigns every user to the index pivot of minimum [`quality`].
pub fn gen_subgraphs(net: &SpatialSocialNetwork, pivots: &PivotSet) -> Result<Vec<Vec<UserId>>> {
    gen_subgraphs_with(net, pivots, PartitionStrategy::SocialSpatial)
}

pub fn gen_subgraphs_with(
    net: &SpatialSocialNetwork,
    pivots: &PivotSet,
    strategy: PartitionStrategy,
) -> Result<Vec<Vec<UserId>>> {
    expect_kind(pivots, PivotKind::Index)?;
    if let Some(&p) = pivots.pivots.iter().find(|&&p| !net.social.contains(p)) {
        return Err(Error::UnknownUser(p));
    }
    let rows: Vec<PivotRows> = pivots.pivots.iter().map(|&p| PivotRows::compute(net, p)).collect();
    let refs: Vec<&PivotRows> = rows.iter().collect();
    Ok(groups_from_assignment(
        &assign(&refs, &pivots.pivots, net.user_count(), strategy),
        pivots.len(),
    ))
}

/// Raw spatial, structural and influence sums over ordered intra-group pairs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChiMeasures {
    pub sc: f64,
    pub st: f64,
    pub inf: f64,
}

/// Per-user rows needed to evaluate the quality sums from one endpoint.
struct AnchorRows {
    avg: Vec<f64>,
    hops: Vec<u32>,
    influence: Vec<f64>,
}

struct ChiContext {
    anchors: Vec<UserId>,
    rows: Vec<AnchorRows>,
    phi: Vec<u32>,
}

impl ChiContext {
    fn new(net: &SpatialSocialNetwork, anchors: Vec<UserId>) -> Self {
        let scores = crate::metrics::edge_scores(
            &net.social,
            &QueryTopicVector::uniform(net.topic_count().max(1)),
        )
        .unwrap_or_else(|_| vec![0.0; net.social.edges().len()]);
        let rows = anchors
            .iter()
            .map(|&a| AnchorRows {
                avg: user_avg_row(net, a),
                hops: bfs_row(&net.social, a),
                influence: influence_row(&net.social, &scores, a, Direction::Outgoing, None),
            })
            .collect();
        ChiContext {
            anchors,
            rows,
            phi: compute_supports(&net.social).phis().to_vec(),
        }
    }

    /// Sums over ordered pairs `(a, v)` with `a` an anchor and `v` in a's group.
    fn measure(&self, assignment: &[u32], groups: &[Vec<UserId>]) -> ChiMeasures {
        let mut chi = ChiMeasures::default();
        for (&a, rows) in self.anchors.iter().zip(&self.rows) {
            for &v in &groups[assignment[a as usize] as usize] {
                if v == a {
                    continue;
                }
                let v = v as usize;
                chi.sc += rows.avg[v];
                let hops = rows.hops[v];
                if hops != HOP_INF && hops > 0 {
                    chi.st += (self.phi[a as usize] + self.phi[v]) as f64 / hops as f64;
                }
                chi.inf += rows.influence[v];
            }
        }
        chi
    }
}

/// Exact quality sums of a partition, influence taken under uniform topic
/// weights.
pub fn subgraph_quality_measures(
    net: &SpatialSocialNetwork,
    partition: &[Vec<UserId>],
) -> Result<ChiMeasures> {
    let m = net.user_count();
    let mut assignment = vec![u32::MAX; m];
    for (g, members) in partition.iter().enumerate() {
        for &u in members {
            if !net.social.contains(u) {
                return Err(Error::UnknownUser(u));
            }
            if assignment[u as usize] != u32::MAX {
                return Err(Error::InvalidArgument(format!("user {u} appears in two groups")));
            }
            assignment[u as usize] = g as u32;
        }
    }
    let anchors: Vec<UserId> = partition
        .iter()
        .filter(|g| g.len() > 1)
        .flat_map(|g| g.iter().copied())
        .collect();
    let ctx = ChiContext::new(net, anchors);
    Ok(ctx.measure(&assignment, partition))
}

/// Running min/max of each quality sum, used to bring them onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiNormalizer {
    min: [f64; 3],
    max: [f64; 3],
}

impl Default for ChiNormalizer {
    fn default() -> Self {
        ChiNormalizer {
            min: [f64::INFINITY; 3],
            max: [f64::NEG_INFINITY; 3],
        }
    }
}

impl ChiNormalizer {
    pub fn observe(&mut self, chi: &ChiMeasures) {
        for (i, x) in [chi.sc, chi.st, chi.inf].into_iter().enumerate() {
            self.min[i] = self.min[i].min(x);
            self.max[i] = self.max[i].max(x);
        }
    }

    pub fn normalize(&self, chi: &ChiMeasures) -> ChiMeasures {
        let f = |i: usize, x: f64| {
            let span = self.max[i] - self.min[i];
            if span > 0.0 {
                ((x - self.min[i]) / span).clamp(0.0, 1.0)
            } else {
                0.0
            }
        };
        ChiMeasures {
            sc: f(0, chi.sc),
            st: f(1, chi.st),
            inf: f(2, chi.inf),
        }
    }
}

/// Partition cost from normalized quality sums; lower is better.
pub fn cost_index_pivots(normalized: &ChiMeasures, weights: &[f64; 3]) -> f64 {
    weights[0] * normalized.sc + weights[1] * (1.0 - normalized.st) + weights[2] * (1.0 - normalized.inf)
}

/// Scoring interface for the swap search.
trait Objective {
    type Score: Clone;
    fn score(&mut self, pivots: &[u32]) -> Self::Score;
    /// True when `a` is strictly better than `b`.
    fn better(&self, a: &Self::Score, b: &Self::Score) -> bool;
    /// Drops cached rows of pivots outside `keep`.
    fn trim(&mut self, keep: &HashSet<u32>);
}

/// Runs `global_iter` restarts of `swap_iter` single-pivot swaps each and
/// returns the best set found. Restart `r` uses its own seeded stream so the
/// outcome does not depend on evaluation order; ties keep the earlier restart.
fn local_search<O: Objective>(
    obj: &mut O,
    population: u32,
    size: usize,
    config: &PivotSearchConfig,
    salt: u64,
) -> (Vec<u32>, O::Score) {
    if size as u32 == population {
        let all: Vec<u32> = (0..population).collect();
        let s = obj.score(&all);
        return (all, s);
    }
    let mut best: Option<(Vec<u32>, O::Score)> = None;
    for restart in 0..config.global_iter {
        let mut rng = ChaCha8Rng::seed_from_u64(
            config.rng_seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (restart as u64) << 32,
        );
        let mut current: Vec<u32> = sample(&mut rng, population as usize, size)
            .into_iter()
            .map(|i| i as u32)
            .collect();
        let mut current_score = obj.score(&current);
        let mut members: HashSet<u32> = current.iter().copied().collect();
        for _ in 0..config.swap_iter {
            let slot = rng.random_range(0..size);
            let incoming = loop {
                let c = rng.random_range(0..population);
                if !members.contains(&c) {
                    break c;
                }
            };
            let mut trial = current.clone();
            trial[slot] = incoming;
            let s = obj.score(&trial);
            if obj.better(&s, &current_score) {
                members.remove(&current[slot]);
                members.insert(incoming);
                current = trial;
                current_score = s;
            }
            let mut keep = members.clone();
            if let Some((b, _)) = &best {
                keep.extend(b.iter().copied());
            }
            obj.trim(&keep);
        }
        let replace = match &best {
            None => true,
            Some((_, b)) => obj.better(&current_score, b),
        };
        if replace {
            best = Some((current, current_score));
        }
    }
    best.expect("global_iter >= 1")
}

/// Rows cached across evaluations, bounded by `capacity` entries.
struct RowCache<T> {
    rows: HashMap<u32, Rc<T>>,
    capacity: usize,
}

impl<T> RowCache<T> {
    fn new(capacity: usize) -> Self {
        RowCache {
            rows: HashMap::new(),
            capacity: capacity.max(1),
        }
    }

    fn get(&mut self, id: u32, compute: impl FnOnce() -> T) -> Rc<T> {
        self.rows.entry(id).or_insert_with(|| Rc::new(compute())).clone()
    }

    fn trim(&mut self, keep: &HashSet<u32>) {
        if self.rows.len() > self.capacity {
            self.rows.retain(|id, _| keep.contains(id));
        }
    }
}

/// Row cache capacity keeping roughly 64 MiB of `row_bytes`-sized rows.
fn cache_capacity(row_bytes: usize, at_least: usize) -> usize {
    (64 << 20) / row_bytes.max(1) + at_least
}

struct RoadObjective<'a> {
    net: &'a SpatialSocialNetwork,
    pairs: Vec<(UserId, UserId)>,
    cache: RowCache<Vec<f64>>,
    minimize: bool,
}

impl Objective for RoadObjective<'_> {
    type Score = f64;

    fn score(&mut self, pivots: &[u32]) -> f64 {
        let net = self.net;
        let rows: Vec<Rc<Vec<f64>>> = pivots
            .iter()
            .map(|&p| self.cache.get(p, || road_pivot_row(net, p).expect("pivot in range")))
            .collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        road_cost_from_rows(&refs, &self.pairs)
    }

    fn better(&self, a: &f64, b: &f64) -> bool {
        if self.minimize {
            a < b
        } else {
            a > b
        }
    }

    fn trim(&mut self, keep: &HashSet<u32>) {
        self.cache.trim(keep);
    }
}

struct SocialObjective<'a> {
    net: &'a SpatialSocialNetwork,
    pairs: Vec<(UserId, UserId)>,
    cache: RowCache<Vec<u32>>,
}

impl Objective for SocialObjective<'_> {
    type Score = f64;

    fn score(&mut self, pivots: &[u32]) -> f64 {
        let social = &self.net.social;
        let rows: Vec<Rc<Vec<u32>>> = pivots
            .iter()
            .map(|&p| self.cache.get(p, || bfs_row(social, p)))
            .collect();
        let refs: Vec<&[u32]> = rows.iter().map(|r| r.as_slice()).collect();
        social_cost_from_rows(&refs, &self.pairs)
    }

    fn better(&self, a: &f64, b: &f64) -> bool {
        a > b
    }

    fn trim(&mut self, keep: &HashSet<u32>) {
        self.cache.trim(keep);
    }
}

struct IndexObjective<'a> {
    net: &'a SpatialSocialNetwork,
    strategy: PartitionStrategy,
    weights: [f64; 3],
    chi: ChiContext,
    cache: RowCache<PivotRows>,
    normalizer: ChiNormalizer,
}

impl Objective for IndexObjective<'_> {
    type Score = ChiMeasures;

    fn score(&mut self, pivots: &[u32]) -> ChiMeasures {
        let net = self.net;
        let rows: Vec<Rc<PivotRows>> = pivots
            .iter()
            .map(|&p| self.cache.get(p, || PivotRows::compute(net, p)))
            .collect();
        let refs: Vec<&PivotRows> = rows.iter().map(|r| r.as_ref()).collect();
        let assignment = assign(&refs, pivots, net.user_count(), self.strategy);
        let groups = groups_from_assignment(&assignment, pivots.len());
        let chi = self.chi.measure(&assignment, &groups);
        self.normalizer.observe(&chi);
        chi
    }

    fn better(&self, a: &ChiMeasures, b: &ChiMeasures) -> bool {
        let cost = |c| cost_index_pivots(&self.normalizer.normalize(c), &self.weights);
        cost(a) < cost(b)
    }

    fn trim(&mut self, keep: &HashSet<u32>) {
        self.cache.trim(keep);
    }
}

/// Outcome of a pivot search together with its raw cost.
#[derive(Debug, Clone, PartialEq)]
pub struct PivotSelection {
    pub pivots: PivotSet,
    /// Road/social: the sampled pair cost. Index: the partition cost under the
    /// normalization in effect when the search ended.
    pub cost: f64,
}

/// Swap-based local search for `size` pivots of `kind`.
pub fn select_pivots(
    net: &SpatialSocialNetwork,
    kind: PivotKind,
    size: usize,
    config: &PivotSearchConfig,
) -> Result<PivotSelection> {
    select_pivots_with(net, kind, size, config, PartitionStrategy::SocialSpatial)
}

pub fn select_pivots_with(
    net: &SpatialSocialNetwork,
    kind: PivotKind,
    size: usize,
    config: &PivotSearchConfig,
    strategy: PartitionStrategy,
) -> Result<PivotSelection> {
    config.validate()?;
    let m = net.user_count();
    if m == 0 || net.road.vertex_count() == 0 {
        return Err(Error::EmptyNetwork);
    }
    let population = match kind {
        PivotKind::Road => net.road.vertex_count(),
        PivotKind::Social | PivotKind::Index => m,
    };
    if size == 0 || size > population {
        return Err(Error::InvalidArgument(format!(
            "cannot pick {size} pivots from a population of {population}"
        )));
    }
    let pairs = || sample_pairs(m, config.sample_pairs, config.rng_seed ^ 0x5eed);
    let (pivots, cost) = match kind {
        PivotKind::Road => {
            let mut obj = RoadObjective {
                net,
                pairs: pairs(),
                cache: RowCache::new(cache_capacity(m * 8, 2 * size)),
                minimize: config.minimize_road_cost,
            };
            local_search(&mut obj, population as u32, size, config, 1)
        }
        PivotKind::Social => {
            let mut obj = SocialObjective {
                net,
                pairs: pairs(),
                cache: RowCache::new(cache_capacity(m * 4, 2 * size)),
            };
            local_search(&mut obj, population as u32, size, config, 2)
        }
        PivotKind::Index => {
            let anchors: Vec<UserId> = if m <= config.anchors {
                (0..m as UserId).collect()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed ^ 0xa9c4);
                let mut a: Vec<UserId> = sample(&mut rng, m, config.anchors)
                    .into_iter()
                    .map(|i| i as UserId)
                    .collect();
                a.sort_unstable();
                a
            };
            let mut obj = IndexObjective {
                net,
                strategy,
                weights: config.weights,
                chi: ChiContext::new(net, anchors),
                cache: RowCache::new(cache_capacity(m * 12, 2 * size)),
                normalizer: ChiNormalizer::default(),
            };
            let (pivots, chi) = local_search(&mut obj, population as u32, size, config, 3);
            let cost = cost_index_pivots(&obj.normalizer.normalize(&chi), &config.weights);
            (pivots, cost)
        }
    };
    Ok(PivotSelection {
        pivots: PivotSet { kind, pivots },
        cost,
    })
}
