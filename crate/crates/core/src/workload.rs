//! Query workloads: the experiment parameter grid, query-user sampling and
//! a uniform front over every answering algorithm.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{greedy_baseline, rindex_baseline, sindex_baseline};
use crate::engine::{answer_query_with, Community, QueryOptions, QueryStats};
use crate::error::{Error, Result};
use crate::index::SocialSpatialIndex;
use crate::metrics::compute_supports;
use crate::network::{KeywordId, QuerySpec, QueryTopicVector, SpatialSocialNetwork, UserId};

/// One setting of every query parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    /// Number of query keywords `|K_q|`.
    pub keywords: usize,
    /// Number of active query topics.
    pub topics: usize,
    pub sigma: f64,
    pub theta: f64,
    pub k: u32,
    pub d: u32,
}

impl Default for GridPoint {
    fn default() -> Self {
        GridPoint {
            keywords: 5,
            topics: 2,
            sigma: 2.0,
            theta: 0.5,
            k: 5,
            d: 3,
        }
    }
}

/// Values swept per parameter, one factor at a time around `defaults`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamGrid {
    pub keywords: Vec<usize>,
    pub topics: Vec<usize>,
    pub sigma: Vec<f64>,
    pub theta: Vec<f64>,
    pub k: Vec<u32>,
    pub d: Vec<u32>,
    pub defaults: GridPoint,
}

impl Default for ParamGrid {
    fn default() -> Self {
        ParamGrid {
            keywords: vec![2, 3, 5, 8, 10],
            topics: vec![1, 2, 3],
            sigma: vec![0.5, 1.0, 2.0, 3.0, 5.0],
            theta: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            k: vec![2, 3, 5, 7, 10],
            d: vec![1, 2, 3, 5, 10],
            defaults: GridPoint::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    Keywords,
    Topics,
    Sigma,
    Theta,
    K,
    D,
}

impl Param {
    pub const ALL: [Param; 6] = [Param::Keywords, Param::Topics, Param::Sigma, Param::Theta, Param::K, Param::D];

    pub fn name(self) -> &'static str {
        match self {
            Param::Keywords => "keywords",
            Param::Topics => "topics",
            Param::Sigma => "sigma",
            Param::Theta => "theta",
            Param::K => "k",
            Param::D => "d",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A point of a one-factor sweep: the varied parameter, its value and the
/// full setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub param: Param,
    pub value: f64,
    pub point: GridPoint,
}

impl ParamGrid {
    pub fn sweep(&self, param: Param) -> Vec<SweepPoint> {
        let base = self.defaults;
        let at = |value: f64, point: GridPoint| SweepPoint { param, value, point };
        match param {
            Param::Keywords => self.keywords.iter().map(|&v| at(v as f64, GridPoint { keywords: v, ..base })).collect(),
            Param::Topics => self.topics.iter().map(|&v| at(v as f64, GridPoint { topics: v, ..base })).collect(),
            Param::Sigma => self.sigma.iter().map(|&v| at(v, GridPoint { sigma: v, ..base })).collect(),
            Param::Theta => self.theta.iter().map(|&v| at(v, GridPoint { theta: v, ..base })).collect(),
            Param::K => self.k.iter().map(|&v| at(v as f64, GridPoint { k: v, ..base })).collect(),
            Param::D => self.d.iter().map(|&v| at(v as f64, GridPoint { d: v, ..base })).collect(),
        }
    }

    /// Every one-factor-at-a-time point, parameter by parameter.
    pub fn all_points(&self) -> Vec<SweepPoint> {
        Param::ALL.iter().flat_map(|&p| self.sweep(p)).collect()
    }
}

/// Up to `count` distinct users with `Φ(u) >= min_phi`, in seeded random
/// order. Falls back to any user when too few qualify.
pub fn sample_query_users(net: &SpatialSocialNetwork, count: usize, min_phi: u32, seed: u64) -> Vec<UserId> {
    let supports = compute_supports(&net.social);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut good: Vec<UserId> = (0..net.user_count() as UserId).filter(|&u| supports.phi(u) >= min_phi).collect();
    good.shuffle(&mut rng);
    if good.len() < count {
        let mut rest: Vec<UserId> = (0..net.user_count() as UserId).filter(|&u| supports.phi(u) < min_phi).collect();
        rest.shuffle(&mut rng);
        good.extend(rest);
    }
    good.truncate(count);
    good
}

/// Query keywords for `q`: q's own keywords first, then the remaining ids
/// of `1..=universe` ascending, truncated to `count`. Sets for growing
/// `count` are nested.
pub fn query_keywords(net: &SpatialSocialNetwork, q: UserId, count: usize, universe: KeywordId) -> BTreeSet<KeywordId> {
    let own = net.user(q).keywords.ids();
    own.iter()
        .copied()
        .chain((1..=universe).filter(|k| !own.contains(k)))
        .take(count)
        .collect()
}

/// Query for user `q` at `point`. Keywords come from the `1..=10` universe.
pub fn make_query(net: &SpatialSocialNetwork, q: UserId, point: &GridPoint) -> Result<QuerySpec> {
    let topics = net.topic_count();
    if point.topics == 0 || point.topics > topics {
        return Err(Error::InvalidConfig(format!(
            "grid asks for {} active topics, network has {topics}",
            point.topics
        )));
    }
    Ok(QuerySpec {
        q,
        topics: QueryTopicVector::prefix(topics, point.topics),
        keywords: query_keywords(net, q, point.keywords, 10),
        k: point.k,
        d: point.d,
        sigma: point.sigma,
        theta: point.theta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Engine,
    Greedy,
    SIndex,
    RIndex,
}

impl Algo {
    pub const ALL: [Algo; 4] = [Algo::Engine, Algo::Greedy, Algo::SIndex, Algo::RIndex];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Engine => "engine",
            Algo::Greedy => "greedy",
            Algo::SIndex => "sindex",
            Algo::RIndex => "rindex",
        }
    }

    pub fn parse(s: &str) -> Option<Algo> {
        Algo::ALL.into_iter().find(|a| a.name() == s)
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The network plus whichever indexes the algorithms need.
pub struct Answerers<'a> {
    pub net: &'a SpatialSocialNetwork,
    pub engine: Option<&'a SocialSpatialIndex>,
    pub sindex: Option<&'a SocialSpatialIndex>,
    pub rindex: Option<&'a SocialSpatialIndex>,
    pub options: QueryOptions,
}

impl Answerers<'_> {
    pub fn answer(&self, algo: Algo, query: &QuerySpec) -> Result<(Community, QueryStats)> {
        let missing = || Error::InvalidConfig(format!("no index available for {algo}"));
        match algo {
            Algo::Engine => answer_query_with(self.net, self.engine.ok_or_else(missing)?, query, self.options),
            Algo::Greedy => greedy_baseline(self.net, query),
            Algo::SIndex => sindex_baseline(self.net, self.sindex.ok_or_else(missing)?, query),
            Algo::RIndex => rindex_baseline(self.net, self.rindex.ok_or_else(missing)?, query),
        }
    }
}
