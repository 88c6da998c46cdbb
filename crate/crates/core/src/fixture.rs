//! The six-user "project team" example network with two topics
//! (basketball, technology).
//!
//! Users `1..=6` correspond to u1..u6 of the example; user `0` is an unused
//! placeholder (no friends, no query keywords) so that example user ids and
//! internal ids coincide. Querying from u2 for {Python, HTML, C++} returns
//! {u1, u2, u4}: u6 is too far away on the road network, u5's influence is
//! too low and u3 has none of the requested skills.

use std::collections::BTreeSet;

use crate::network::{
    CheckIn, KeywordSet, QuerySpec, QueryTopicVector, RoadEdge, RoadNetwork, RoadVertex,
    SocialNetwork, SpatialSocialNetwork, TopicEdge, User, DEFAULT_KEYWORD_BITS,
};

/// Keyword dictionary used by the fixture.
pub mod kw {
    use crate::network::KeywordId;
    pub const JAVA: KeywordId = 1;
    pub const CPP: KeywordId = 2;
    pub const PYTHON: KeywordId = 3;
    pub const HTML: KeywordId = 4;
    pub const R: KeywordId = 5;
    pub const GO: KeywordId = 6;
    pub const SQL: KeywordId = 7;
}

pub const BASKETBALL: usize = 0;
pub const TECHNOLOGY: usize = 1;

fn road() -> RoadNetwork {
    // 0..=7 along a unit-spaced street, 8 far east, 9 just north of 0
    let mut vertices: Vec<RoadVertex> = (0..8).map(|i| RoadVertex { x: i as f64, y: 0.0 }).collect();
    vertices.push(RoadVertex { x: 10.0, y: 0.0 });
    vertices.push(RoadVertex { x: 0.0, y: 1.0 });
    let mut edges: Vec<RoadEdge> = (0..7)
        .map(|i| RoadEdge { src: i, dst: i + 1, length: 1.0 })
        .collect();
    edges.push(RoadEdge { src: 7, dst: 8, length: 3.0 });
    edges.push(RoadEdge { src: 0, dst: 9, length: 1.0 });
    RoadNetwork::new(vertices, edges)
}

fn user(id: u32, keywords: &[u32], checkins: &[u32]) -> User {
    User {
        id,
        keywords: KeywordSet::new(keywords.iter().copied(), DEFAULT_KEYWORD_BITS),
        checkins: checkins
            .iter()
            .enumerate()
            .map(|(i, &v)| CheckIn {
                road_vertex: v,
                timestamp: 1_600_000_000 + 3600 * i as i64,
            })
            .collect(),
    }
}

pub fn sample_network() -> SpatialSocialNetwork {
    use kw::*;
    let users = vec![
        user(0, &[SQL], &[8]),
        user(1, &[PYTHON, JAVA], &[0, 1]),
        user(2, &[HTML, CPP], &[1]),
        user(3, &[GO], &[7]),
        user(4, &[PYTHON, HTML], &[2, 3]),
        user(5, &[CPP, R], &[2, 3]),
        user(6, &[CPP], &[5, 6]),
    ];
    // (src, dst, basketball, technology)
    let raw: &[(u32, u32, f64, f64)] = &[
        (1, 2, 0.8, 0.6),
        (2, 1, 0.9, 0.5),
        (2, 4, 0.6, 0.7),
        (4, 2, 0.7, 0.8),
        (1, 4, 0.7, 0.7),
        (4, 1, 0.8, 0.6),
        (1, 5, 0.1, 0.2),
        (5, 1, 0.2, 0.1),
        (4, 5, 0.1, 0.1),
        (5, 4, 0.2, 0.2),
        (2, 6, 0.9, 0.8),
        (6, 2, 0.9, 0.9),
        (4, 6, 0.8, 0.8),
        (6, 4, 0.9, 0.8),
        (3, 6, 0.5, 0.5),
        (6, 3, 0.5, 0.5),
        (3, 5, 0.3, 0.3),
        (5, 3, 0.3, 0.3),
    ];
    let edges = raw
        .iter()
        .map(|&(src, dst, b, t)| TopicEdge {
            src,
            dst,
            weights: vec![b, t],
        })
        .collect();
    SpatialSocialNetwork::new(road(), SocialNetwork::new(users, edges, 2))
}

/// u2 looks for a team skilled in {Python, HTML, C++}.
pub fn sample_query() -> QuerySpec {
    QuerySpec {
        q: 2,
        topics: QueryTopicVector::uniform(2),
        keywords: BTreeSet::from([kw::PYTHON, kw::HTML, kw::CPP]),
        k: 3,
        d: 2,
        sigma: 2.5,
        theta: 0.5,
    }
}

/// Expected community for [`sample_query`].
pub const SAMPLE_COMMUNITY: [u32; 3] = [1, 2, 4];
