//! Hierarchical social-spatial index.
//!
//! Leaves are the user groups produced by the index-pivot partition. Leaves
//! are grouped bottom-up by nearest MBR centroid until a single root remains.
//! Every node stores aggregates that dominate its members: keyword bits,
//! support range, per-topic influence maxima and per-pivot distance ranges.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{DecodeError, Error, Result};
use crate::metrics::compute_supports;
use crate::network::{KeywordBits, QueryTopicVector, SpatialSocialNetwork, UserId};
use crate::pivots::{
    gen_subgraphs_with, select_pivots_with, PartitionStrategy, PivotDistanceTables, PivotKind,
    PivotSearchConfig, PivotSet,
};

pub type NodeId = u32;

const MAGIC: &[u8; 4] = b"SSIX";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mbr {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Mbr {
    pub fn empty() -> Self {
        Mbr {
            min_x: f64::INFINITY,
            min_y: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            max_y: f64::NEG_INFINITY,
        }
    }

    pub fn include_point(&mut self, x: f64, y: f64) {
        self.min_x = self.min_x.min(x);
        self.min_y = self.min_y.min(y);
        self.max_x = self.max_x.max(x);
        self.max_y = self.max_y.max(y);
    }

    pub fn include(&mut self, other: &Mbr) {
        self.min_x = self.min_x.min(other.min_x);
        self.min_y = self.min_y.min(other.min_y);
        self.max_x = self.max_x.max(other.max_x);
        self.max_y = self.max_y.max(other.max_y);
    }

    pub fn centroid(&self) -> (f64, f64) {
        ((self.min_x + self.max_x) / 2.0, (self.min_y + self.max_y) / 2.0)
    }
}

/// Per-user record stored in a leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafEntry {
    pub user: UserId,
    pub keyword_bits: KeywordBits,
    pub phi: u32,
    /// Per-topic maximum weight over the user's outgoing edges.
    pub inf_out: Vec<f64>,
    /// Per-topic maximum weight over the user's incoming edges.
    pub inf_in: Vec<f64>,
    /// `A_k(u)` for each road pivot.
    pub road_pivot_dists: Vec<f64>,
    /// Hop distance to each social pivot.
    pub social_pivot_dists: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeContent {
    Leaf(Vec<LeafEntry>),
    Inner(Vec<NodeId>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexNode {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub content: NodeContent,
    pub mbr: Mbr,
    pub keyword_bits: KeywordBits,
    /// Smallest and largest Φ among members.
    pub lb_phi: u32,
    pub ub_phi: u32,
    /// Per-topic maxima over every edge incident to a member.
    pub inf_out: Vec<f64>,
    pub inf_in: Vec<f64>,
    /// `(lb, ub)` of member `A_k` values per road pivot.
    pub road_bounds: Vec<(f64, f64)>,
    /// `(lb, ub)` of member hop distances per social pivot.
    pub social_bounds: Vec<(u32, u32)>,
    pub user_count: u32,
}

/// Node influence maxima folded against one query topic vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeTopicBound {
    pub ub_out: f64,
    pub ub_in: f64,
}

impl IndexNode {
    pub fn is_leaf(&self) -> bool {
        matches!(self.content, NodeContent::Leaf(_))
    }

    pub fn children(&self) -> &[NodeId] {
        match &self.content {
            NodeContent::Inner(c) => c,
            NodeContent::Leaf(_) => &[],
        }
    }

    pub fn entries(&self) -> &[LeafEntry] {
        match &self.content {
            NodeContent::Leaf(e) => e,
            NodeContent::Inner(_) => &[],
        }
    }
}

pub fn node_bounds_for_query(node: &IndexNode, t: &QueryTopicVector) -> Result<NodeTopicBound> {
    if node.inf_out.len() != t.len() {
        return Err(Error::TopicLength {
            expected: node.inf_out.len(),
            got: t.len(),
        });
    }
    Ok(NodeTopicBound {
        ub_out: t.fold(&node.inf_out),
        ub_in: t.fold(&node.inf_in),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexConfig {
    /// Number of road pivots `l`, clamped to the number of road vertices.
    pub road_pivots: usize,
    /// Number of social pivots `h`, clamped to the number of users.
    pub social_pivots: usize,
    /// Number of leaf groups `ι`; `None` picks `max(4, ceil(M / 64))`.
    pub leaf_groups: Option<usize>,
    pub fanout: usize,
    pub search: PivotSearchConfig,
    pub strategy: PartitionStrategy,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig {
            road_pivots: 8,
            social_pivots: 8,
            leaf_groups: None,
            fanout: 8,
            search: PivotSearchConfig::default(),
            strategy: PartitionStrategy::SocialSpatial,
        }
    }
}

impl IndexConfig {
    pub fn validate(&self) -> Result<()> {
        if self.road_pivots == 0 || self.social_pivots == 0 {
            return Err(Error::InvalidConfig("pivot counts must be >= 1".into()));
        }
        if self.leaf_groups == Some(0) {
            return Err(Error::InvalidConfig("leaf group count must be >= 1".into()));
        }
        if self.fanout < 2 {
            return Err(Error::InvalidConfig("fanout must be >= 2".into()));
        }
        self.search.validate()
    }

    pub fn default_leaf_groups(users: usize) -> usize {
        4.max(users.div_ceil(64))
    }
}

/// Final costs of the three pivot searches.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PivotCosts {
    pub road: f64,
    pub social: f64,
    pub index: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SocialSpatialIndex {
    root: NodeId,
    nodes: Vec<IndexNode>,
    road_pivots: PivotSet,
    social_pivots: PivotSet,
    index_pivots: PivotSet,
    fanout: u32,
    strategy: PartitionStrategy,
    topic_count: u32,
    keyword_width: u32,
    user_count: u32,
    costs: PivotCosts,
    /// `(leaf node, position in leaf)` per user; derived from `nodes`.
    user_slot: Vec<(NodeId, u32)>,
}

impl SocialSpatialIndex {
    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn nodes(&self) -> &[IndexNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &IndexNode {
        &self.nodes[id as usize]
    }

    pub fn road_pivots(&self) -> &PivotSet {
        &self.road_pivots
    }

    pub fn social_pivots(&self) -> &PivotSet {
        &self.social_pivots
    }

    pub fn index_pivots(&self) -> &PivotSet {
        &self.index_pivots
    }

    pub fn fanout(&self) -> usize {
        self.fanout as usize
    }

    pub fn strategy(&self) -> PartitionStrategy {
        self.strategy
    }

    pub fn topic_count(&self) -> usize {
        self.topic_count as usize
    }

    pub fn keyword_width(&self) -> usize {
        self.keyword_width as usize
    }

    pub fn user_count(&self) -> usize {
        self.user_count as usize
    }

    pub fn costs(&self) -> PivotCosts {
        self.costs
    }

    pub fn contains_user(&self, u: UserId) -> bool {
        (u as usize) < self.user_slot.len()
    }

    pub fn leaf_of(&self, u: UserId) -> NodeId {
        self.user_slot[u as usize].0
    }

    pub fn entry(&self, u: UserId) -> &LeafEntry {
        let (leaf, pos) = self.user_slot[u as usize];
        &self.nodes[leaf as usize].entries()[pos as usize]
    }

    /// Number of levels from root to leaves.
    pub fn height(&self) -> usize {
        let mut h = 1;
        let mut n = self.root;
        while let Some(&c) = self.node(n).children().first() {
            h += 1;
            n = c;
        }
        h
    }

    /// Users under `node`, in tree order.
    pub fn members(&self, node: NodeId) -> Vec<UserId> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(n) = stack.pop() {
            match &self.node(n).content {
                NodeContent::Leaf(e) => out.extend(e.iter().map(|e| e.user)),
                NodeContent::Inner(c) => stack.extend(c.iter().rev()),
            }
        }
        out
    }

    /// Ancestors of `node` (exclusive), nearest first.
    pub fn ancestors(&self, node: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(self.node(node).parent, move |&p| self.node(p).parent)
    }

    /// Checks structural invariants; used after decoding.
    fn check_structure(&mut self) -> std::result::Result<(), String> {
        let n = self.nodes.len();
        if (self.root as usize) >= n {
            return Err(format!("root {} out of range", self.root));
        }
        let mut parent_seen = vec![false; n];
        let mut slot = vec![None; self.user_count as usize];
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id as usize != i {
                return Err(format!("node at position {i} has id {}", node.id));
            }
            match &node.content {
                NodeContent::Inner(children) => {
                    for &c in children {
                        let child = self.nodes.get(c as usize).ok_or(format!("dangling child {c}"))?;
                        if child.parent != Some(node.id) || parent_seen[c as usize] {
                            return Err(format!("child {c} has inconsistent parent"));
                        }
                        parent_seen[c as usize] = true;
                    }
                }
                NodeContent::Leaf(entries) => {
                    for (pos, e) in entries.iter().enumerate() {
                        let s = slot
                            .get_mut(e.user as usize)
                            .ok_or(format!("user {} out of range", e.user))?;
                        if s.is_some() {
                            return Err(format!("user {} appears twice", e.user));
                        }
                        *s = Some((node.id, pos as u32));
                    }
                }
            }
        }
        for (i, seen) in parent_seen.iter().enumerate() {
            if !seen && i != self.root as usize {
                return Err(format!("node {i} is unreachable"));
            }
        }
        if self.nodes[self.root as usize].parent.is_some() {
            return Err("root has a parent".into());
        }
        self.user_slot = slot
            .into_iter()
            .enumerate()
            .map(|(u, s)| s.ok_or(format!("user {u} is missing from the leaves")))
            .collect::<std::result::Result<_, _>>()?;
        Ok(())
    }
}

fn leaf_entries(
    net: &SpatialSocialNetwork,
    tables: &PivotDistanceTables,
    phi: &[u32],
) -> Vec<LeafEntry> {
    let social = &net.social;
    let topics = social.topic_count();
    let maxima = |edges: &[(UserId, u32)]| {
        let mut m = vec![0.0f64; topics];
        for &(_, e) in edges {
            for (a, &w) in m.iter_mut().zip(&social.edge(e).weights) {
                *a = a.max(w);
            }
        }
        m
    };
    social
        .users()
        .iter()
        .map(|u| LeafEntry {
            user: u.id,
            keyword_bits: u.keywords.bits().clone(),
            phi: phi[u.id as usize],
            inf_out: maxima(social.out_edges(u.id)),
            inf_in: maxima(social.in_edges(u.id)),
            road_pivot_dists: tables.road_row(u.id).to_vec(),
            social_pivot_dists: tables.social_row(u.id).to_vec(),
        })
        .collect()
}

/// Aggregates over a non-empty list of parts, each contributing one member
/// user or one child node.
struct Aggregate {
    mbr: Mbr,
    bits: KeywordBits,
    lb_phi: u32,
    ub_phi: u32,
    inf_out: Vec<f64>,
    inf_in: Vec<f64>,
    road: Vec<(f64, f64)>,
    social: Vec<(u32, u32)>,
    users: u32,
}

impl Aggregate {
    fn new(width: usize, topics: usize, l: usize, h: usize) -> Self {
        Aggregate {
            mbr: Mbr::empty(),
            bits: KeywordBits::zeros(width),
            lb_phi: u32::MAX,
            ub_phi: 0,
            inf_out: vec![0.0; topics],
            inf_in: vec![0.0; topics],
            road: vec![(f64::INFINITY, f64::NEG_INFINITY); l],
            social: vec![(u32::MAX, 0); h],
            users: 0,
        }
    }

    fn add_entry(&mut self, net: &SpatialSocialNetwork, e: &LeafEntry) {
        for c in &net.user(e.user).checkins {
            let v = net.road.vertex(c.road_vertex);
            self.mbr.include_point(v.x, v.y);
        }
        self.bits.union_with(&e.keyword_bits);
        self.lb_phi = self.lb_phi.min(e.phi);
        self.ub_phi = self.ub_phi.max(e.phi);
        max_into(&mut self.inf_out, &e.inf_out);
        max_into(&mut self.inf_in, &e.inf_in);
        for (b, &a) in self.road.iter_mut().zip(&e.road_pivot_dists) {
            *b = (b.0.min(a), b.1.max(a));
        }
        for (b, &d) in self.social.iter_mut().zip(&e.social_pivot_dists) {
            *b = (b.0.min(d), b.1.max(d));
        }
        self.users += 1;
    }

    fn add_node(&mut self, n: &IndexNode) {
        self.mbr.include(&n.mbr);
        self.bits.union_with(&n.keyword_bits);
        self.lb_phi = self.lb_phi.min(n.lb_phi);
        self.ub_phi = self.ub_phi.max(n.ub_phi);
        max_into(&mut self.inf_out, &n.inf_out);
        max_into(&mut self.inf_in, &n.inf_in);
        for (b, &(lo, hi)) in self.road.iter_mut().zip(&n.road_bounds) {
            *b = (b.0.min(lo), b.1.max(hi));
        }
        for (b, &(lo, hi)) in self.social.iter_mut().zip(&n.social_bounds) {
            *b = (b.0.min(lo), b.1.max(hi));
        }
        self.users += n.user_count;
    }

    fn into_node(self, id: NodeId, content: NodeContent) -> IndexNode {
        IndexNode {
            id,
            parent: None,
            content,
            mbr: self.mbr,
            keyword_bits: self.bits,
            lb_phi: self.lb_phi,
            ub_phi: self.ub_phi,
            inf_out: self.inf_out,
            inf_in: self.inf_in,
            road_bounds: self.road,
            social_bounds: self.social,
            user_count: self.users,
        }
    }
}

fn max_into(acc: &mut [f64], xs: &[f64]) {
    for (a, &x) in acc.iter_mut().zip(xs) {
        *a = a.max(x);
    }
}

/// Groups `level` into parents of at most `fanout` children: repeatedly take
/// the lowest remaining id and its `fanout - 1` nearest centroids.
fn group_level(nodes: &[IndexNode], level: &[NodeId], fanout: usize) -> Vec<Vec<NodeId>> {
    let mut remaining: BTreeSet<NodeId> = level.iter().copied().collect();
    let mut groups = Vec::new();
    while let Some(&seed) = remaining.iter().next() {
        remaining.remove(&seed);
        let (sx, sy) = nodes[seed as usize].mbr.centroid();
        let mut by_distance: Vec<(f64, NodeId)> = remaining
            .iter()
            .map(|&c| {
                let (x, y) = nodes[c as usize].mbr.centroid();
                ((x - sx).hypot(y - sy), c)
            })
            .collect();
        by_distance.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut group = vec![seed];
        for &(_, c) in by_distance.iter().take(fanout - 1) {
            remaining.remove(&c);
            group.push(c);
        }
        group.sort_unstable();
        groups.push(group);
    }
    groups
}

/// Selects pivots, partitions users into leaves and builds the tree.
pub fn build_index(net: &SpatialSocialNetwork, config: &IndexConfig) -> Result<SocialSpatialIndex> {
    config.validate()?;
    let m = net.user_count();
    if m == 0 || net.road.vertex_count() == 0 {
        return Err(Error::EmptyNetwork);
    }
    let l = config.road_pivots.min(net.road.vertex_count());
    let h = config.social_pivots.min(m);
    let iota = config
        .leaf_groups
        .unwrap_or_else(|| IndexConfig::default_leaf_groups(m))
        .min(m);
    let road = select_pivots_with(net, PivotKind::Road, l, &config.search, config.strategy)?;
    let social = select_pivots_with(net, PivotKind::Social, h, &config.search, config.strategy)?;
    let index = select_pivots_with(net, PivotKind::Index, iota, &config.search, config.strategy)?;
    let tables = PivotDistanceTables::compute(net, &road.pivots, &social.pivots)?;
    let supports = compute_supports(&net.social);
    let mut entries: Vec<Option<LeafEntry>> =
        leaf_entries(net, &tables, supports.phis()).into_iter().map(Some).collect();
    let groups = gen_subgraphs_with(net, &index.pivots, config.strategy)?;

    let (width, topics) = (net.keyword_width(), net.topic_count());
    let mut nodes: Vec<IndexNode> = Vec::new();
    for group in &groups {
        let mut agg = Aggregate::new(width, topics, l, h);
        let leaf: Vec<LeafEntry> = group
            .iter()
            .map(|&u| entries[u as usize].take().expect("user in one group"))
            .collect();
        for e in &leaf {
            agg.add_entry(net, e);
        }
        let id = nodes.len() as NodeId;
        nodes.push(agg.into_node(id, NodeContent::Leaf(leaf)));
    }
    let mut level: Vec<NodeId> = (0..nodes.len() as NodeId).collect();
    while level.len() > 1 {
        let mut next = Vec::new();
        for group in group_level(&nodes, &level, config.fanout) {
            let mut agg = Aggregate::new(width, topics, l, h);
            for &c in &group {
                agg.add_node(&nodes[c as usize]);
            }
            let id = nodes.len() as NodeId;
            for &c in &group {
                nodes[c as usize].parent = Some(id);
            }
            nodes.push(agg.into_node(id, NodeContent::Inner(group)));
            next.push(id);
        }
        level = next;
    }
    let mut idx = SocialSpatialIndex {
        root: level[0],
        nodes,
        road_pivots: road.pivots,
        social_pivots: social.pivots,
        index_pivots: index.pivots,
        fanout: config.fanout as u32,
        strategy: config.strategy,
        topic_count: topics as u32,
        keyword_width: width as u32,
        user_count: m as u32,
        costs: PivotCosts {
            road: road.cost,
            social: social.cost,
            index: index.cost,
        },
        user_slot: Vec::new(),
    };
    idx.check_structure().map_err(|e| Error::InvalidArgument(format!("index construction: {e}")))?;
    Ok(idx)
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, x: u8) {
        self.buf.push(x);
    }
    fn u32(&mut self, x: u32) {
        self.buf.extend_from_slice(&x.to_le_bytes());
    }
    fn u64(&mut self, x: u64) {
        self.buf.extend_from_slice(&x.to_le_bytes());
    }
    fn f64(&mut self, x: f64) {
        self.buf.extend_from_slice(&x.to_le_bytes());
    }
    fn len(&mut self, n: usize) {
        self.u32(n as u32);
    }
    fn f64s(&mut self, xs: &[f64]) {
        self.len(xs.len());
        xs.iter().for_each(|&x| self.f64(x));
    }
    fn u32s(&mut self, xs: &[u32]) {
        self.len(xs.len());
        xs.iter().for_each(|&x| self.u32(x));
    }
    fn bits(&mut self, b: &KeywordBits) {
        self.len(b.words().len());
        b.words().iter().for_each(|&w| self.u64(w));
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

type Decoded<T> = std::result::Result<T, DecodeError>;

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, context: &'static str) -> Decoded<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(DecodeError::Truncated { context });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self, c: &'static str) -> Decoded<u8> {
        Ok(self.take(1, c)?[0])
    }
    fn u32(&mut self, c: &'static str) -> Decoded<u32> {
        Ok(u32::from_le_bytes(self.take(4, c)?.try_into().unwrap()))
    }
    fn u64(&mut self, c: &'static str) -> Decoded<u64> {
        Ok(u64::from_le_bytes(self.take(8, c)?.try_into().unwrap()))
    }
    fn f64(&mut self, c: &'static str) -> Decoded<f64> {
        Ok(f64::from_le_bytes(self.take(8, c)?.try_into().unwrap()))
    }
    /// Reads a length and checks that `elem` bytes per item remain.
    fn len(&mut self, elem: usize, c: &'static str) -> Decoded<usize> {
        let n = self.u32(c)? as usize;
        if n.saturating_mul(elem) > self.buf.len() - self.pos {
            return Err(DecodeError::Truncated { context: c });
        }
        Ok(n)
    }
    fn f64s(&mut self, c: &'static str) -> Decoded<Vec<f64>> {
        let n = self.len(8, c)?;
        (0..n).map(|_| self.f64(c)).collect()
    }
    fn u32s(&mut self, c: &'static str) -> Decoded<Vec<u32>> {
        let n = self.len(4, c)?;
        (0..n).map(|_| self.u32(c)).collect()
    }
    fn bits(&mut self, c: &'static str) -> Decoded<KeywordBits> {
        let n = self.len(8, c)?;
        if n == 0 || !n.is_power_of_two() {
            return Err(DecodeError::Malformed(format!("keyword bit-vector of {n} words")));
        }
        Ok(KeywordBits::from_words((0..n).map(|_| self.u64(c)).collect::<Decoded<_>>()?))
    }
}

fn kind_code(k: PivotKind) -> u8 {
    match k {
        PivotKind::Road => 0,
        PivotKind::Social => 1,
        PivotKind::Index => 2,
    }
}

fn strategy_code(s: PartitionStrategy) -> u8 {
    match s {
        PartitionStrategy::SocialSpatial => 0,
        PartitionStrategy::Social => 1,
        PartitionStrategy::Spatial => 2,
    }
}

fn write_node(w: &mut Writer, n: &IndexNode) {
    w.u32(n.id);
    w.u32(n.parent.unwrap_or(u32::MAX));
    for x in [n.mbr.min_x, n.mbr.min_y, n.mbr.max_x, n.mbr.max_y] {
        w.f64(x);
    }
    w.bits(&n.keyword_bits);
    w.u32(n.lb_phi);
    w.u32(n.ub_phi);
    w.u32(n.user_count);
    w.f64s(&n.inf_out);
    w.f64s(&n.inf_in);
    w.len(n.road_bounds.len());
    for &(lo, hi) in &n.road_bounds {
        w.f64(lo);
        w.f64(hi);
    }
    w.len(n.social_bounds.len());
    for &(lo, hi) in &n.social_bounds {
        w.u32(lo);
        w.u32(hi);
    }
    match &n.content {
        NodeContent::Inner(children) => {
            w.u8(0);
            w.u32s(children);
        }
        NodeContent::Leaf(entries) => {
            w.u8(1);
            w.len(entries.len());
            for e in entries {
                w.u32(e.user);
                w.bits(&e.keyword_bits);
                w.u32(e.phi);
                w.f64s(&e.inf_out);
                w.f64s(&e.inf_in);
                w.f64s(&e.road_pivot_dists);
                w.u32s(&e.social_pivot_dists);
            }
        }
    }
}

fn read_node(r: &mut Reader) -> Decoded<IndexNode> {
    const C: &str = "node record";
    let id = r.u32(C)?;
    let parent = match r.u32(C)? {
        u32::MAX => None,
        p => Some(p),
    };
    let mbr = Mbr {
        min_x: r.f64(C)?,
        min_y: r.f64(C)?,
        max_x: r.f64(C)?,
        max_y: r.f64(C)?,
    };
    let keyword_bits = r.bits(C)?;
    let lb_phi = r.u32(C)?;
    let ub_phi = r.u32(C)?;
    let user_count = r.u32(C)?;
    let inf_out = r.f64s(C)?;
    let inf_in = r.f64s(C)?;
    let n = r.len(16, C)?;
    let road_bounds = (0..n)
        .map(|_| Ok((r.f64(C)?, r.f64(C)?)))
        .collect::<Decoded<_>>()?;
    let n = r.len(8, C)?;
    let social_bounds = (0..n)
        .map(|_| Ok((r.u32(C)?, r.u32(C)?)))
        .collect::<Decoded<_>>()?;
    let content = match r.u8(C)? {
        0 => NodeContent::Inner(r.u32s(C)?),
        1 => {
            let n = r.len(4, C)?;
            let mut entries = Vec::with_capacity(n);
            for _ in 0..n {
                entries.push(LeafEntry {
                    user: r.u32(C)?,
                    keyword_bits: r.bits(C)?,
                    phi: r.u32(C)?,
                    inf_out: r.f64s(C)?,
                    inf_in: r.f64s(C)?,
                    road_pivot_dists: r.f64s(C)?,
                    social_pivot_dists: r.u32s(C)?,
                });
            }
            NodeContent::Leaf(entries)
        }
        t => return Err(DecodeError::Malformed(format!("unknown node tag {t}"))),
    };
    Ok(IndexNode {
        id,
        parent,
        content,
        mbr,
        keyword_bits,
        lb_phi,
        ub_phi,
        inf_out,
        inf_in,
        road_bounds,
        social_bounds,
        user_count,
    })
}

/// Encodes the index: `"SSIX"`, format version, header, pivot sets, then one
/// length-prefixed record per node. All integers little-endian.
pub fn serialize_index(idx: &SocialSpatialIndex) -> Vec<u8> {
    let mut w = Writer { buf: Vec::new() };
    w.buf.extend_from_slice(MAGIC);
    w.u32(FORMAT_VERSION);
    w.u32(idx.user_count);
    w.u32(idx.topic_count);
    w.u32(idx.keyword_width);
    w.u32(idx.fanout);
    w.u8(strategy_code(idx.strategy));
    w.u32(idx.root);
    w.f64(idx.costs.road);
    w.f64(idx.costs.social);
    w.f64(idx.costs.index);
    for set in [&idx.road_pivots, &idx.social_pivots, &idx.index_pivots] {
        w.u8(kind_code(set.kind));
        w.u32s(&set.pivots);
    }
    w.len(idx.nodes.len());
    for n in &idx.nodes {
        let mut rec = Writer { buf: Vec::new() };
        write_node(&mut rec, n);
        w.len(rec.buf.len());
        w.buf.extend_from_slice(&rec.buf);
    }
    w.buf
}

pub fn deserialize_index(bytes: &[u8]) -> std::result::Result<SocialSpatialIndex, DecodeError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic: [u8; 4] = r.take(4, "magic")?.try_into().unwrap();
    if &magic != MAGIC {
        return Err(DecodeError::BadMagic(magic));
    }
    let version = r.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(DecodeError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    const H: &str = "header";
    let user_count = r.u32(H)?;
    let topic_count = r.u32(H)?;
    let keyword_width = r.u32(H)?;
    let fanout = r.u32(H)?;
    let strategy = match r.u8(H)? {
        0 => PartitionStrategy::SocialSpatial,
        1 => PartitionStrategy::Social,
        2 => PartitionStrategy::Spatial,
        s => return Err(DecodeError::Malformed(format!("unknown partition strategy {s}"))),
    };
    let root = r.u32(H)?;
    let costs = PivotCosts {
        road: r.f64(H)?,
        social: r.f64(H)?,
        index: r.f64(H)?,
    };
    let mut sets = Vec::new();
    for expected in [PivotKind::Road, PivotKind::Social, PivotKind::Index] {
        let code = r.u8("pivot set")?;
        if code != kind_code(expected) {
            return Err(DecodeError::Malformed(format!("pivot set kind code {code}")));
        }
        sets.push(PivotSet {
            kind: expected,
            pivots: r.u32s("pivot set")?,
        });
    }
    let count = r.len(4, "node table")?;
    let mut nodes = Vec::with_capacity(count);
    for _ in 0..count {
        let len = r.u32("node record length")? as usize;
        let body = r.take(len, "node record")?;
        let mut sub = Reader { buf: body, pos: 0 };
        let node = read_node(&mut sub)?;
        if sub.pos != body.len() {
            return Err(DecodeError::Malformed(format!("node {} has trailing bytes", node.id)));
        }
        nodes.push(node);
    }
    if r.pos != bytes.len() {
        return Err(DecodeError::Malformed("trailing bytes after node table".into()));
    }
    let index_pivots = sets.pop().unwrap();
    let social_pivots = sets.pop().unwrap();
    let road_pivots = sets.pop().unwrap();
    let mut idx = SocialSpatialIndex {
        root,
        nodes,
        road_pivots,
        social_pivots,
        index_pivots,
        fanout,
        strategy,
        topic_count,
        keyword_width,
        user_count,
        costs,
        user_slot: Vec::new(),
    };
    idx.check_structure().map_err(DecodeError::Malformed)?;
    Ok(idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;

    fn small_config() -> IndexConfig {
        IndexConfig {
            road_pivots: 2,
            social_pivots: 2,
            leaf_groups: Some(4),
            fanout: 2,
            ..IndexConfig::default()
        }
    }

    #[test]
    fn forced_shape_has_height_three() {
        let net = fixture::sample_network();
        let idx = build_index(&net, &small_config()).unwrap();
        assert_eq!(idx.height(), 3);
        assert_eq!(idx.nodes().len(), 7);
        let mut users = idx.members(idx.root());
        users.sort_unstable();
        assert_eq!(users, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn single_leaf_tree() {
        let net = fixture::sample_network();
        let cfg = IndexConfig {
            leaf_groups: Some(1),
            ..small_config()
        };
        let idx = build_index(&net, &cfg).unwrap();
        assert_eq!(idx.height(), 1);
        assert!(idx.node(idx.root()).is_leaf());
    }

    #[test]
    fn round_trip_is_identity() {
        let net = fixture::sample_network();
        let idx = build_index(&net, &small_config()).unwrap();
        let bytes = serialize_index(&idx);
        let back = deserialize_index(&bytes).unwrap();
        assert_eq!(back, idx);
        assert_eq!(serialize_index(&back), bytes);
    }

    #[test]
    fn corrupt_streams_are_rejected() {
        let net = fixture::sample_network();
        let bytes = serialize_index(&build_index(&net, &small_config()).unwrap());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(deserialize_index(&bad), Err(DecodeError::BadMagic(_))));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(
            deserialize_index(&bad),
            Err(DecodeError::VersionMismatch { found: 9, expected: 1 })
        ));
        for cut in [3, 10, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(
                deserialize_index(&bytes[..cut]),
                Err(DecodeError::Truncated { .. })
            ));
        }
    }

    #[test]
    fn topic_fold_of_singleton_node() {
        let net = fixture::sample_network();
        let idx = build_index(&net, &small_config()).unwrap();
        let t = QueryTopicVector::uniform(2);
        let e = idx.entry(2);
        let leaf = idx.node(idx.leaf_of(2));
        let b = node_bounds_for_query(leaf, &t).unwrap();
        assert!(b.ub_out >= t.fold(&e.inf_out));
        assert!(node_bounds_for_query(leaf, &QueryTopicVector::uniform(3)).is_err());
    }
}
