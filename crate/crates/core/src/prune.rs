//! Bounds and pruning predicates for users and index nodes.
//!
//! `Sound` mode prunes only when a constraint is provably violated: lower
//! bounds are compared against the distance thresholds and upper bounds
//! against the influence and support thresholds. `PaperLiteral` mode applies
//! the upper-bound distance tests and the `lb_Φ < k` node test as printed;
//! these can discard valid answers and exist for comparison only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{IndexNode, SocialSpatialIndex};
use crate::metrics::{edge_scores, EdgeSupportMap, HOP_INF};
use crate::network::{
    keyword_overlap, KeywordBits, QuerySpec, QueryTopicVector, SocialNetwork,
    SpatialSocialNetwork, User, UserId,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PruneMode {
    #[default]
    Sound,
    PaperLiteral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Prune,
    Keep,
    /// The constraint is provably satisfied.
    AcceptFast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    Spatial,
    Influence,
    Social,
    Support,
    Keyword,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneDecision {
    pub verdict: Verdict,
    pub rule: Rule,
    pub mode: PruneMode,
}

impl PruneDecision {
    pub fn is_prune(&self) -> bool {
        self.verdict == Verdict::Prune
    }
}

/// Which rules a traversal applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSet {
    pub spatial: bool,
    pub influence: bool,
    pub social: bool,
    pub support: bool,
    pub keyword: bool,
}

impl RuleSet {
    pub const ALL: RuleSet = RuleSet {
        spatial: true,
        influence: true,
        social: true,
        support: true,
        keyword: true,
    };
    /// Hop distance and truss support only.
    pub const SOCIAL: RuleSet = RuleSet {
        spatial: false,
        influence: false,
        social: true,
        support: true,
        keyword: false,
    };
    /// Road distance and keywords only.
    pub const SPATIAL_KEYWORD: RuleSet = RuleSet {
        spatial: true,
        influence: false,
        social: false,
        support: false,
        keyword: true,
    };

    fn enabled(&self, rule: Rule) -> bool {
        match rule {
            Rule::Spatial => self.spatial,
            Rule::Influence => self.influence,
            Rule::Social => self.social,
            Rule::Support => self.support,
            Rule::Keyword => self.keyword,
        }
    }
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet::ALL
    }
}

/// `true` when `hops` satisfies the hop constraint `< d`; `d == u32::MAX`
/// disables it.
pub fn hop_within(hops: u32, d: u32) -> bool {
    d == HOP_INF || hops < d
}

/// `min_k (A_k(u) + A_k(v))`.
pub fn ub_avg_from_rows(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x + y).fold(f64::INFINITY, f64::min)
}

/// `max_k |A_k(u) - A_k(v)|`.
pub fn lb_avg_from_rows(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Lower bound on hop distance from pivot hop rows. A user that reaches a
/// pivot the other cannot is in a different component.
pub fn lb_hops_from_rows(a: &[u32], b: &[u32]) -> u32 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| match (x == HOP_INF, y == HOP_INF) {
            (false, false) => x.abs_diff(y),
            (true, true) => 0,
            _ => HOP_INF,
        })
        .max()
        .unwrap_or(0)
}

pub fn ub_hops_from_rows(a: &[u32], b: &[u32]) -> u32 {
    a.iter()
        .zip(b)
        .filter(|(&x, &y)| x != HOP_INF && y != HOP_INF)
        .map(|(&x, &y)| x + y)
        .min()
        .unwrap_or(HOP_INF)
}

/// Smallest `|x - value|` over `x` in `[lo, hi]`.
fn gap(value: f64, lo: f64, hi: f64) -> f64 {
    if value < lo {
        lo - value
    } else if value > hi {
        value - hi
    } else {
        0.0
    }
}

/// Lower bound on `avg_dist_rn(q, u)` over every member `u` of a node with
/// per-pivot ranges `bounds`.
pub fn node_lb_avg(q_row: &[f64], bounds: &[(f64, f64)]) -> f64 {
    q_row
        .iter()
        .zip(bounds)
        .map(|(&a, &(lo, hi))| gap(a, lo, hi))
        .fold(0.0, f64::max)
}

/// Lower bound on hop distance between q and any member of a node.
pub fn node_lb_hops(q_row: &[u32], bounds: &[(u32, u32)]) -> u32 {
    q_row
        .iter()
        .zip(bounds)
        .map(|(&a, &(lo, hi))| {
            if a == HOP_INF {
                // only members that also miss the pivot can be reachable
                if hi == HOP_INF {
                    0
                } else {
                    HOP_INF
                }
            } else if lo == HOP_INF {
                HOP_INF
            } else {
                gap(a as f64, lo as f64, hi as f64) as u32
            }
        })
        .max()
        .unwrap_or(0)
}

/// Folded per-topic maxima of `u`'s outgoing and incoming edge weights.
pub fn ub_inf_fold(net: &SocialNetwork, u: UserId, t: &QueryTopicVector) -> Result<(f64, f64)> {
    if !net.contains(u) {
        return Err(Error::UnknownUser(u));
    }
    if t.len() != net.topic_count() {
        return Err(Error::TopicLength {
            expected: net.topic_count(),
            got: t.len(),
        });
    }
    let fold = |edges: &[(UserId, u32)]| {
        let mut m = vec![0.0f64; t.len()];
        for &(_, e) in edges {
            for (a, &w) in m.iter_mut().zip(&net.edge(e).weights) {
                *a = a.max(w);
            }
        }
        t.fold(&m)
    };
    Ok((fold(net.out_edges(u)), fold(net.in_edges(u))))
}

/// Everything the predicates need for one query.
pub struct BoundsContext<'a> {
    pub net: &'a SpatialSocialNetwork,
    pub index: &'a SocialSpatialIndex,
    pub query: &'a QuerySpec,
    pub mode: PruneMode,
    pub rules: RuleSet,
    query_bits: KeywordBits,
    scores: Vec<f64>,
    q_road: Vec<f64>,
    q_social: Vec<u32>,
    ub_out_q: f64,
    ub_in_q: f64,
    /// Per node: strongest direct edge q → member and member → q.
    direct: Vec<(f64, f64)>,
    /// Per node: whether q lies below it.
    holds_q: Vec<bool>,
}

impl<'a> BoundsContext<'a> {
    pub fn new(
        net: &'a SpatialSocialNetwork,
        index: &'a SocialSpatialIndex,
        query: &'a QuerySpec,
        mode: PruneMode,
        rules: RuleSet,
    ) -> Result<Self> {
        query.validate(net)?;
        if index.user_count() != net.user_count()
            || index.topic_count() != net.topic_count()
            || index.keyword_width() != net.keyword_width()
        {
            return Err(Error::InvalidArgument("index was built for a different network".into()));
        }
        let q = query.q;
        let scores = edge_scores(&net.social, &query.topics)?;
        let entry = index.entry(q);
        let mut direct = vec![(0.0f64, 0.0f64); index.nodes().len()];
        let mut holds_q = vec![false; index.nodes().len()];
        for &(v, e) in net.social.out_edges(q) {
            let leaf = index.leaf_of(v);
            for n in std::iter::once(leaf).chain(index.ancestors(leaf)) {
                direct[n as usize].0 = direct[n as usize].0.max(scores[e as usize]);
            }
        }
        for &(v, e) in net.social.in_edges(q) {
            let leaf = index.leaf_of(v);
            for n in std::iter::once(leaf).chain(index.ancestors(leaf)) {
                direct[n as usize].1 = direct[n as usize].1.max(scores[e as usize]);
            }
        }
        let leaf = index.leaf_of(q);
        for n in std::iter::once(leaf).chain(index.ancestors(leaf)) {
            holds_q[n as usize] = true;
        }
        Ok(BoundsContext {
            net,
            index,
            query,
            mode,
            rules,
            query_bits: KeywordBits::from_keywords(&query.keywords, net.keyword_width()),
            q_road: entry.road_pivot_dists.clone(),
            q_social: entry.social_pivot_dists.clone(),
            ub_out_q: query.topics.fold(&entry.inf_out),
            ub_in_q: query.topics.fold(&entry.inf_in),
            scores,
            direct,
            holds_q,
        })
    }

    fn decision(&self, verdict: Verdict, rule: Rule) -> PruneDecision {
        PruneDecision {
            verdict,
            rule,
            mode: self.mode,
        }
    }

    /// Score of the direct edge `u → v` under the query topics, 0 if absent.
    pub fn edge_score(&self, u: UserId, v: UserId) -> f64 {
        self.net
            .social
            .find_edge(u, v)
            .map_or(0.0, |e| self.scores[e as usize])
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Folded `(ub_out, ub_in)` of user `u`.
    pub fn folds(&self, u: UserId) -> (f64, f64) {
        let e = self.index.entry(u);
        (self.query.topics.fold(&e.inf_out), self.query.topics.fold(&e.inf_in))
    }

    pub fn ub_avg_dist_rn(&self, u: UserId, v: UserId) -> f64 {
        ub_avg_from_rows(&self.index.entry(u).road_pivot_dists, &self.index.entry(v).road_pivot_dists)
    }

    pub fn lb_avg_dist_rn(&self, u: UserId, v: UserId) -> f64 {
        lb_avg_from_rows(&self.index.entry(u).road_pivot_dists, &self.index.entry(v).road_pivot_dists)
    }

    pub fn lb_hops(&self, u: UserId, v: UserId) -> u32 {
        lb_hops_from_rows(&self.index.entry(u).social_pivot_dists, &self.index.entry(v).social_pivot_dists)
    }

    pub fn ub_hops(&self, u: UserId, v: UserId) -> u32 {
        ub_hops_from_rows(&self.index.entry(u).social_pivot_dists, &self.index.entry(v).social_pivot_dists)
    }

    /// Upper bound on the influence of `u` on `v`: the direct edge, or a
    /// longer path whose first and last edges are bounded by the folds.
    pub fn ub_inf_score(&self, u: UserId, v: UserId) -> f64 {
        let (out_u, _) = self.folds(u);
        let (_, in_v) = self.folds(v);
        self.edge_score(u, v).max(out_u * in_v)
    }

    pub fn spatial_prune_user(&self, u: UserId) -> PruneDecision {
        let sigma = self.query.sigma;
        let ub = ub_avg_from_rows(&self.q_road, &self.index.entry(u).road_pivot_dists);
        let prune = match self.mode {
            PruneMode::Sound => lb_avg_from_rows(&self.q_road, &self.index.entry(u).road_pivot_dists) >= sigma,
            PruneMode::PaperLiteral => ub > sigma,
        };
        let verdict = if prune {
            Verdict::Prune
        } else if ub < sigma {
            Verdict::AcceptFast
        } else {
            Verdict::Keep
        };
        self.decision(verdict, Rule::Spatial)
    }

    pub fn influence_prune_user(&self, u: UserId) -> PruneDecision {
        let q = self.query.q;
        let theta = self.query.theta;
        let prune = u != q && (self.ub_inf_score(q, u) < theta || self.ub_inf_score(u, q) < theta);
        self.decision(if prune { Verdict::Prune } else { Verdict::Keep }, Rule::Influence)
    }

    pub fn support_prune_user(&self, u: UserId) -> PruneDecision {
        let prune = self.index.entry(u).phi < self.query.min_support();
        self.decision(if prune { Verdict::Prune } else { Verdict::Keep }, Rule::Support)
    }

    pub fn social_prune_user(&self, u: UserId) -> PruneDecision {
        let d = self.query.d;
        let row = &self.index.entry(u).social_pivot_dists;
        let ub = ub_hops_from_rows(&self.q_social, row);
        let prune = match self.mode {
            PruneMode::Sound => !hop_within(lb_hops_from_rows(&self.q_social, row), d),
            PruneMode::PaperLiteral => !hop_within(ub, d),
        };
        let verdict = if prune {
            Verdict::Prune
        } else if ub != HOP_INF && hop_within(ub, d) {
            Verdict::AcceptFast
        } else {
            Verdict::Keep
        };
        self.decision(verdict, Rule::Social)
    }

    pub fn keyword_prune_user(&self, u: UserId) -> PruneDecision {
        keyword_prune_user(self.net.user(u), self.query)
    }

    /// First enabled rule that prunes `u`; q itself is never pruned.
    pub fn user_prune(&self, u: UserId) -> Option<PruneDecision> {
        if u == self.query.q {
            return None;
        }
        let checks: [(Rule, fn(&Self, UserId) -> PruneDecision); 5] = [
            (Rule::Keyword, Self::keyword_prune_user),
            (Rule::Spatial, Self::spatial_prune_user),
            (Rule::Social, Self::social_prune_user),
            (Rule::Support, Self::support_prune_user),
            (Rule::Influence, Self::influence_prune_user),
        ];
        checks
            .iter()
            .filter(|(r, _)| self.rules.enabled(*r))
            .map(|(_, f)| f(self, u))
            .find(PruneDecision::is_prune)
    }

    /// Spatial lower bound of a node, used as its traversal key.
    pub fn node_spatial_lb(&self, node: &IndexNode) -> f64 {
        if self.rules.spatial {
            node_lb_avg(&self.q_road, &node.road_bounds)
        } else {
            0.0
        }
    }

    /// First enabled rule that prunes every member of `node`. Nodes on the
    /// path to q are never pruned.
    pub fn node_prune(&self, node: &IndexNode) -> Option<PruneDecision> {
        if self.holds_q[node.id as usize] {
            return None;
        }
        let q = self.query;
        let literal = self.mode == PruneMode::PaperLiteral;
        let prune = |rule: Rule, cond: bool| (self.rules.enabled(rule) && cond).then(|| self.decision(Verdict::Prune, rule));
        prune(Rule::Keyword, !node.keyword_bits.intersects(&self.query_bits))
            .or_else(|| {
                let lb = node_lb_avg(&self.q_road, &node.road_bounds);
                prune(Rule::Spatial, if literal { lb > q.sigma } else { lb >= q.sigma })
            })
            .or_else(|| {
                let lb = node_lb_hops(&self.q_social, &node.social_bounds);
                let cond = if literal {
                    q.d != HOP_INF && lb > q.d
                } else {
                    !hop_within(lb, q.d)
                };
                prune(Rule::Social, cond)
            })
            .or_else(|| {
                let cond = if literal {
                    node.lb_phi < q.k
                } else {
                    node.ub_phi < q.min_support()
                };
                prune(Rule::Support, cond)
            })
            .or_else(|| {
                let (direct_in, direct_out) = self.direct[node.id as usize];
                let ub_in = q.topics.fold(&node.inf_in);
                let ub_out = q.topics.fold(&node.inf_out);
                let to_node = direct_in.max(self.ub_out_q * ub_in);
                let from_node = direct_out.max(ub_out * self.ub_in_q);
                prune(Rule::Influence, to_node < q.theta || from_node < q.theta)
            })
    }
}

/// Prunes `u` when it shares no keyword with the query.
pub fn keyword_prune_user(u: &User, query: &QuerySpec) -> PruneDecision {
    let prune = !keyword_overlap(&u.keywords, &query.keywords);
    PruneDecision {
        verdict: if prune { Verdict::Prune } else { Verdict::Keep },
        rule: Rule::Keyword,
        mode: PruneMode::Sound,
    }
}

/// Prunes `u` when no incident edge reaches the support `k - 2`.
pub fn support_prune_user(supports: &EdgeSupportMap, u: UserId, k: u32) -> PruneDecision {
    let prune = supports.phi(u) < k.saturating_sub(2);
    PruneDecision {
        verdict: if prune { Verdict::Prune } else { Verdict::Keep },
        rule: Rule::Support,
        mode: PruneMode::Sound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;
    use crate::index::{build_index, IndexConfig};
    use crate::metrics::compute_supports;

    #[test]
    fn row_bounds() {
        assert_eq!(ub_avg_from_rows(&[3.0, 1.0], &[0.0, 5.0]), 3.0);
        assert_eq!(lb_avg_from_rows(&[3.0, 1.0], &[0.0, 5.0]), 4.0);
        assert_eq!(lb_hops_from_rows(&[1, HOP_INF], &[3, 2]), HOP_INF);
        assert_eq!(lb_hops_from_rows(&[1, HOP_INF], &[3, HOP_INF]), 2);
        assert_eq!(ub_hops_from_rows(&[1, HOP_INF], &[3, 2]), 4);
        assert_eq!(ub_hops_from_rows(&[HOP_INF], &[3]), HOP_INF);
    }

    #[test]
    fn node_bounds_piecewise() {
        assert_eq!(node_lb_avg(&[1.0, 10.0], &[(2.0, 4.0), (3.0, 5.0)]), 5.0);
        assert_eq!(node_lb_avg(&[3.0], &[(2.0, 4.0)]), 0.0);
        assert_eq!(node_lb_hops(&[1], &[(4, 6)]), 3);
        assert_eq!(node_lb_hops(&[HOP_INF], &[(1, 2)]), HOP_INF);
        assert_eq!(node_lb_hops(&[HOP_INF], &[(1, HOP_INF)]), 0);
        assert_eq!(node_lb_hops(&[2], &[(HOP_INF, HOP_INF)]), HOP_INF);
    }

    #[test]
    fn pendant_user_fails_support() {
        let net = fixture::sample_network();
        let s = compute_supports(&net.social);
        // user 0 has no friends
        assert!(support_prune_user(&s, 0, 3).is_prune());
        assert!(!support_prune_user(&s, 0, 2).is_prune());
    }

    #[test]
    fn keyword_rule_on_fixture() {
        let net = fixture::sample_network();
        let q = fixture::sample_query();
        assert!(!keyword_prune_user(net.user(6), &q).is_prune());
        assert!(keyword_prune_user(net.user(3), &q).is_prune());
    }

    #[test]
    fn fold_of_single_out_edge() {
        let net = fixture::sample_network();
        let t = QueryTopicVector::one_hot(2, fixture::TECHNOLOGY);
        // user 0 is isolated
        assert_eq!(ub_inf_fold(&net.social, 0, &t).unwrap(), (0.0, 0.0));
        let (out, inn) = ub_inf_fold(&net.social, 3, &t).unwrap();
        assert!((out - 0.5).abs() < 1e-12 && (inn - 0.5).abs() < 1e-12);
    }

    #[test]
    fn q_and_its_ancestors_are_kept() {
        let net = fixture::sample_network();
        let idx = build_index(&net, &IndexConfig { leaf_groups: Some(3), fanout: 2, ..IndexConfig::default() }).unwrap();
        let mut query = fixture::sample_query();
        query.keywords = [99].into();
        let ctx = BoundsContext::new(&net, &idx, &query, PruneMode::Sound, RuleSet::ALL).unwrap();
        let leaf = idx.leaf_of(query.q);
        assert!(ctx.node_prune(idx.node(leaf)).is_none());
        assert!(ctx.user_prune(query.q).is_none());
        for n in idx.nodes() {
            if !idx.members(n.id).contains(&query.q) {
                assert_eq!(ctx.node_prune(n).unwrap().rule, Rule::Keyword);
            }
        }
    }
}
