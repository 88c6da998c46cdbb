//! Seeded synthetic spatial-social networks.

use std::collections::{BTreeSet, HashSet};

use petgraph::unionfind::UnionFind;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use rstar::primitives::GeomWithData;
use rstar::RTree;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{
    CheckIn, KeywordId, KeywordSet, QuerySpec, QueryTopicVector, RoadEdge, RoadNetwork, RoadVertex,
    SocialNetwork, SpatialSocialNetwork, TopicEdge, User, UserId, VertexId, DEFAULT_KEYWORD_BITS,
};

/// Shape of every random draw: coordinates, degrees, keywords and weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    #[default]
    Uniform,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n_road: usize,
    pub n_users: usize,
    pub distribution: Distribution,
    pub topic_count: usize,
    /// Keywords are drawn from `1..=keyword_universe`.
    pub keyword_universe: u32,
    pub keywords_per_user: (usize, usize),
    pub degree_range: (usize, usize),
    pub checkins_per_user: (usize, usize),
    /// Side length of the square holding road vertices.
    pub extent: f64,
    /// Target average road degree.
    pub road_degree: f64,
    /// Friends are picked among this many users with the nearest homes.
    pub locality_window: usize,
    pub rng_seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_road: 30_000,
            n_users: 30_000,
            distribution: Distribution::Uniform,
            topic_count: 3,
            keyword_universe: 10,
            keywords_per_user: (1, 3),
            degree_range: (1, 10),
            checkins_per_user: (1, 3),
            extent: 10.0,
            road_degree: 3.5,
            locality_window: 10,
            rng_seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_road < 2 {
            return bad(format!("n_road must be >= 2, got {}", self.n_road));
        }
        if self.n_users < 2 {
            return bad(format!("n_users must be >= 2, got {}", self.n_users));
        }
        if self.topic_count == 0 {
            return bad("topic_count must be positive".into());
        }
        if self.keyword_universe == 0 {
            return bad("keyword_universe must be positive".into());
        }
        for (name, (lo, hi)) in [
            ("keywords_per_user", self.keywords_per_user),
            ("degree_range", self.degree_range),
            ("checkins_per_user", self.checkins_per_user),
        ] {
            if lo == 0 || lo > hi {
                return bad(format!("{name} must be a non-empty positive range, got {lo}..={hi}"));
            }
        }
        if self.keywords_per_user.1 > self.keyword_universe as usize {
            return bad("keywords_per_user exceeds keyword_universe".into());
        }
        if self.degree_range.0 >= self.n_users {
            return bad("degree_range minimum needs more users".into());
        }
        if !(self.extent.is_finite() && self.extent > 0.0) {
            return bad(format!("extent must be positive, got {}", self.extent));
        }
        if !(self.road_degree.is_finite() && self.road_degree >= 2.0) {
            return bad(format!("road_degree must be >= 2, got {}", self.road_degree));
        }
        if self.locality_window == 0 {
            return bad("locality_window must be positive".into());
        }
        Ok(())
    }
}

struct Sampler {
    dist: Distribution,
}

impl Sampler {
    /// A real in `[lo, hi]`; Gaussian draws are centred with sd = range/6
    /// and clamped.
    fn real(&self, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
        match self.dist {
            Distribution::Uniform => rng.random_range(lo..=hi),
            Distribution::Gaussian => {
                let normal = Normal::new((lo + hi) / 2.0, (hi - lo) / 6.0).expect("positive sd");
                normal.sample(rng).clamp(lo, hi)
            }
        }
    }

    fn int(&self, rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
        if lo == hi {
            return lo;
        }
        match self.dist {
            Distribution::Uniform => rng.random_range(lo..=hi),
            Distribution::Gaussian => {
                let x = self.real(rng, lo as f64 - 0.5, hi as f64 + 0.5).round() as i64;
                x.clamp(lo as i64, hi as i64) as usize
            }
        }
    }
}

fn stream(seed: u64, salt: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(salt);
    rng
}

type Point = GeomWithData<[f64; 2], VertexId>;

/// Random vertices wired to nearby vertices: a spanning forest over short
/// candidate edges, components then joined by their closest outside
/// vertex, then short extra edges up to the target average degree.
pub fn gen_road(cfg: &GenConfig) -> Result<RoadNetwork> {
    cfg.validate()?;
    let mut rng = stream(cfg.rng_seed, 1);
    let sampler = Sampler { dist: cfg.distribution };
    let n = cfg.n_road;
    let vertices: Vec<RoadVertex> = (0..n)
        .map(|_| RoadVertex {
            x: sampler.real(&mut rng, 0.0, cfg.extent),
            y: sampler.real(&mut rng, 0.0, cfg.extent),
        })
        .collect();
    let tree = RTree::bulk_load(
        vertices
            .iter()
            .enumerate()
            .map(|(i, v)| Point::new([v.x, v.y], i as VertexId))
            .collect(),
    );
    let dist = |a: VertexId, b: VertexId| {
        let (p, q) = (&vertices[a as usize], &vertices[b as usize]);
        (p.x - q.x).hypot(p.y - q.y)
    };

    let neighbors = 6.min(n - 1);
    let mut candidates: Vec<(f64, VertexId, VertexId)> = Vec::with_capacity(n * neighbors);
    let mut seen = HashSet::new();
    for (i, v) in vertices.iter().enumerate() {
        let i = i as VertexId;
        for p in tree.nearest_neighbor_iter(&[v.x, v.y]).filter(|p| p.data != i).take(neighbors) {
            let key = (i.min(p.data), i.max(p.data));
            if seen.insert(key) {
                candidates.push((dist(key.0, key.1), key.0, key.1));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));

    let mut uf = UnionFind::<usize>::new(n);
    let mut chosen: BTreeSet<(VertexId, VertexId)> = BTreeSet::new();
    for &(_, a, b) in &candidates {
        if uf.union(a as usize, b as usize) {
            chosen.insert((a, b));
        }
    }
    loop {
        let mut roots: Vec<usize> = (0..n).map(|v| uf.find(v)).collect();
        roots.sort_unstable();
        roots.dedup();
        if roots.len() <= 1 {
            break;
        }
        // join every component through the closest vertex outside it
        let mut members: Vec<Vec<VertexId>> = vec![Vec::new(); n];
        for v in 0..n {
            members[uf.find(v)].push(v as VertexId);
        }
        let mut links = Vec::new();
        for &r in &roots {
            let mut best: Option<(f64, VertexId, VertexId)> = None;
            for &v in &members[r] {
                let p = &vertices[v as usize];
                if let Some(o) = tree
                    .nearest_neighbor_iter(&[p.x, p.y])
                    .find(|o| uf.find(o.data as usize) != r)
                {
                    let d = dist(v, o.data);
                    if best.is_none_or(|b| d < b.0) {
                        best = Some((d, v, o.data));
                    }
                }
            }
            links.extend(best);
        }
        for (_, a, b) in links {
            if uf.union(a as usize, b as usize) {
                chosen.insert((a.min(b), a.max(b)));
            }
        }
    }

    let target = ((cfg.road_degree * n as f64) / 2.0).round() as usize;
    for &(_, a, b) in &candidates {
        if chosen.len() >= target {
            break;
        }
        chosen.insert((a, b));
    }
    let edges = chosen
        .into_iter()
        .map(|(a, b)| RoadEdge {
            src: a,
            dst: b,
            length: dist(a, b).max(1e-9),
        })
        .collect();
    Ok(RoadNetwork::new(vertices, edges))
}

/// Users with keywords and check-ins near a random home vertex, befriended
/// among the users living closest to them.
/// Every friendship yields both directed edges with independent weights.
pub fn gen_social(cfg: &GenConfig, road: &RoadNetwork) -> Result<SocialNetwork> {
    cfg.validate()?;
    if road.vertex_count() == 0 {
        return Err(Error::EmptyNetwork);
    }
    let mut rng = stream(cfg.rng_seed, 2);
    let sampler = Sampler { dist: cfg.distribution };
    let m = cfg.n_users;
    let nv = road.vertex_count();

    let mut users = Vec::with_capacity(m);
    let mut homes = Vec::with_capacity(m);
    for id in 0..m {
        let mut keywords = BTreeSet::new();
        let want = sampler.int(&mut rng, cfg.keywords_per_user.0, cfg.keywords_per_user.1);
        while keywords.len() < want {
            keywords.insert(sampler.int(&mut rng, 1, cfg.keyword_universe as usize) as KeywordId);
        }
        let home = rng.random_range(0..nv) as VertexId;
        homes.push(home);
        let mut checkins = vec![home];
        let count = sampler.int(&mut rng, cfg.checkins_per_user.0, cfg.checkins_per_user.1);
        while checkins.len() < count {
            let mut v = home;
            for _ in 0..rng.random_range(1..=3) {
                let nbrs = road.neighbors(v);
                if nbrs.is_empty() {
                    break;
                }
                v = nbrs[rng.random_range(0..nbrs.len())].0;
            }
            checkins.push(v);
        }
        let base = 1_600_000_000 + id as i64 * 86_400;
        let checkins = checkins
            .into_iter()
            .enumerate()
            .map(|(i, v)| CheckIn {
                road_vertex: v,
                timestamp: base + i as i64 * 3_600,
            })
            .collect();
        users.push(User {
            id: id as UserId,
            keywords: KeywordSet::new(keywords, DEFAULT_KEYWORD_BITS),
            checkins,
        });
    }

    let homes_tree = RTree::bulk_load(
        homes
            .iter()
            .enumerate()
            .map(|(u, &v)| {
                let p = road.vertex(v);
                Point::new([p.x, p.y], u as UserId)
            })
            .collect(),
    );
    let nearest = |u: usize| {
        let p = road.vertex(homes[u]);
        homes_tree
            .nearest_neighbor_iter(&[p.x, p.y])
            .map(|o| o.data as usize)
            .filter(move |&v| v != u)
    };

    let (dmin, dmax) = cfg.degree_range;
    let wanted: Vec<usize> = (0..m).map(|_| sampler.int(&mut rng, dmin, dmax)).collect();
    let mut friends: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); m];
    for u in 0..m {
        let mut pool: Vec<usize> = nearest(u).take(cfg.locality_window).collect();
        pool.shuffle(&mut rng);
        for v in pool {
            if friends[u].len() >= wanted[u] {
                break;
            }
            if friends[v].len() < dmax && !friends[u].contains(&v) {
                friends[u].insert(v);
                friends[v].insert(u);
            }
        }
    }
    // top up users still below the minimum degree with the nearest users
    // that have room
    for u in 0..m {
        if friends[u].len() >= dmin {
            continue;
        }
        for v in nearest(u) {
            if friends[u].len() >= dmin {
                break;
            }
            if friends[v].len() < dmax && !friends[u].contains(&v) {
                friends[u].insert(v);
                friends[v].insert(u);
            }
        }
    }

    let mut edges = Vec::new();
    for u in 0..m {
        for &v in &friends[u] {
            if u < v {
                for (src, dst) in [(u, v), (v, u)] {
                    let weights = (0..cfg.topic_count).map(|_| sampler.real(&mut rng, 0.0, 1.0)).collect();
                    edges.push(TopicEdge {
                        src: src as UserId,
                        dst: dst as UserId,
                        weights,
                    });
                }
            }
        }
    }
    Ok(SocialNetwork::new(users, edges, cfg.topic_count))
}

pub fn gen_network(cfg: &GenConfig) -> Result<SpatialSocialNetwork> {
    let road = gen_road(cfg)?;
    let social = gen_social(cfg, &road)?;
    Ok(SpatialSocialNetwork::new(road, social))
}

/// Bounds for [`small_instance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallInstanceConfig {
    pub max_users: usize,
    pub max_road: usize,
    pub topic_count: usize,
}

impl Default for SmallInstanceConfig {
    fn default() -> Self {
        SmallInstanceConfig {
            max_users: 12,
            max_road: 40,
            topic_count: 2,
        }
    }
}

/// A dense little network plus a query on it, sized for exhaustive oracles.
/// Friendships are common and weights high so that non-trivial communities
/// exist for a good share of seeds.
pub fn small_instance(seed: u64, cfg: &SmallInstanceConfig) -> (SpatialSocialNetwork, QuerySpec) {
    let mut rng = stream(seed, 3);
    let n_road = rng.random_range(2.max(cfg.max_road / 2)..=cfg.max_road.max(2));
    let m = rng.random_range(2.max(cfg.max_users / 2)..=cfg.max_users.max(2));
    let road = gen_road(&GenConfig {
        n_road,
        n_users: m,
        extent: 4.0,
        rng_seed: rng.random(),
        ..GenConfig::default()
    })
    .expect("valid small road config");

    let p_friend = rng.random_range(0.4..0.85);
    let mut edges = Vec::new();
    for a in 0..m as UserId {
        for b in a + 1..m as UserId {
            if rng.random_bool(p_friend) {
                for (src, dst) in [(a, b), (b, a)] {
                    if rng.random_bool(0.9) {
                        let weights = (0..cfg.topic_count).map(|_| rng.random_range(0.2..=1.0)).collect();
                        edges.push(TopicEdge { src, dst, weights });
                    }
                }
            }
        }
    }
    let users = (0..m as UserId)
        .map(|id| {
            let count = rng.random_range(1..=3);
            let keywords: BTreeSet<KeywordId> = (0..rng.random_range(1..=2)).map(|_| rng.random_range(1..=4)).collect();
            let checkins = (0..count)
                .map(|i| CheckIn {
                    road_vertex: rng.random_range(0..n_road) as VertexId,
                    timestamp: i as i64,
                })
                .collect();
            User {
                id,
                keywords: KeywordSet::new(keywords, DEFAULT_KEYWORD_BITS),
                checkins,
            }
        })
        .collect();
    let net = SpatialSocialNetwork::new(road, SocialNetwork::new(users, edges, cfg.topic_count));

    let topics: Vec<f64> = (0..cfg.topic_count).map(|_| rng.random_range(0.1..1.0)).collect();
    let q = rng.random_range(0..m) as UserId;
    let mut keywords: BTreeSet<KeywordId> = (0..rng.random_range(1..=3)).map(|_| rng.random_range(1..=4)).collect();
    if rng.random_bool(0.85) {
        let own: Vec<KeywordId> = net.user(q).keywords.ids().iter().copied().collect();
        keywords.insert(own[rng.random_range(0..own.len())]);
    }
    let query = QuerySpec {
        q,
        topics: QueryTopicVector::new(topics).expect("positive topic weights"),
        keywords,
        k: [2, 2, 3, 3, 3, 4][rng.random_range(0..6)],
        d: if rng.random_bool(0.2) { u32::MAX } else { rng.random_range(1..=4) },
        sigma: if rng.random_bool(0.1) { f64::INFINITY } else { rng.random_range(1.0..6.0) },
        theta: rng.random_range(0.02..0.5),
    };
    (net, query)
}
