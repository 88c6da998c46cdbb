//! Exhaustive ground truth for small instances.

use std::collections::{BTreeSet, VecDeque};

use crate::checker::check_community;
use crate::error::{Error, Result};
use crate::network::{QuerySpec, SpatialSocialNetwork, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    /// Largest candidate pool (q included) the oracle will enumerate.
    pub max_users: usize,
    /// Stop after this many subsets have been checked.
    pub max_subsets_enumerated: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            max_users: 12,
            max_subsets_enumerated: 1 << 20,
        }
    }
}

/// q plus every user sharing a query keyword and within hop distance `< d`.
pub fn candidate_pool(net: &SpatialSocialNetwork, query: &QuerySpec) -> Result<Vec<UserId>> {
    query.validate(net)?;
    let q = query.q;
    let m = net.user_count();
    let mut hops = vec![u32::MAX; m];
    hops[q as usize] = 0;
    let mut queue = VecDeque::from([q]);
    while let Some(u) = queue.pop_front() {
        for &w in net.social.friends(u) {
            if hops[w as usize] == u32::MAX {
                hops[w as usize] = hops[u as usize] + 1;
                queue.push_back(w);
            }
        }
    }
    Ok((0..m as UserId)
        .filter(|&u| {
            u == q
                || ((query.d == u32::MAX || hops[u as usize] < query.d)
                    && net.user(u).keywords.ids().intersection(&query.keywords).next().is_some())
        })
        .collect())
}

/// Visits `base ∪ X` for subsets `X` of `extra`, largest first and
/// lexicographically within a size, until `visit` returns true.
fn enumerate_extensions(
    base: &BTreeSet<UserId>,
    extra: &[UserId],
    min_size: usize,
    budget: &mut u64,
    mut visit: impl FnMut(&BTreeSet<UserId>) -> bool,
) -> Result<Option<BTreeSet<UserId>>> {
    let n = extra.len();
    for size in (min_size..=n).rev() {
        let mut pick: Vec<usize> = (0..size).collect();
        loop {
            if *budget == 0 {
                return Err(Error::InvalidArgument("oracle subset budget exhausted".into()));
            }
            *budget -= 1;
            let mut set = base.clone();
            set.extend(pick.iter().map(|&i| extra[i]));
            if visit(&set) {
                return Ok(Some(set));
            }
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
    Ok(None)
}

/// Largest valid community within the candidate pool (ties: the
/// lexicographically smallest member list), or `None` when no subset
/// containing q is valid.
pub fn oracle_query(
    net: &SpatialSocialNetwork,
    query: &QuerySpec,
    cfg: &OracleConfig,
) -> Result<Option<Vec<UserId>>> {
    let pool = candidate_pool(net, query)?;
    if pool.len() > cfg.max_users {
        return Err(Error::PoolTooLarge {
            size: pool.len(),
            cap: cfg.max_users,
        });
    }
    let others: Vec<UserId> = pool.into_iter().filter(|&u| u != query.q).collect();
    let mut budget = cfg.max_subsets_enumerated;
    let found = enumerate_extensions(&BTreeSet::from([query.q]), &others, 0, &mut budget, |s| {
        check_community(net, query, s).valid
    })?;
    Ok(found.map(|s| s.into_iter().collect()))
}

/// A valid strict superset of `members` inside the candidate pool, if any.
pub fn valid_superset(
    net: &SpatialSocialNetwork,
    query: &QuerySpec,
    members: &[UserId],
    cfg: &OracleConfig,
) -> Result<Option<Vec<UserId>>> {
    let pool = candidate_pool(net, query)?;
    if pool.len() > cfg.max_users {
        return Err(Error::PoolTooLarge {
            size: pool.len(),
            cap: cfg.max_users,
        });
    }
    let base: BTreeSet<UserId> = members.iter().copied().collect();
    let extra: Vec<UserId> = pool.into_iter().filter(|u| !base.contains(u)).collect();
    let mut budget = cfg.max_subsets_enumerated;
    let found = enumerate_extensions(&base, &extra, 1, &mut budget, |s| check_community(net, query, s).valid)?;
    Ok(found.map(|s| s.into_iter().collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;

    #[test]
    fn oracle() {
        let net = fixture::sample_network();
        let q = fixture::sample_query();
        let found = oracle_query(&net, &q, &OracleConfig::default()).unwrap();
        assert_eq!(found, Some(fixture::SAMPLE_COMMUNITY.to_vec()));
        assert_eq!(valid_superset(&net, &q, &fixture::SAMPLE_COMMUNITY, &OracleConfig::default()).unwrap(), None);
    }

    #[test]
    fn infeasible_query_has_no_community() {
        let net = fixture::sample_network();
        let mut q = fixture::sample_query();
        q.theta = 1.0;
        assert_eq!(oracle_query(&net, &q, &OracleConfig::default()).unwrap(), None);
    }

    #[test]
    fn pool_cap_is_enforced() {
        let net = fixture::sample_network();
        let q = fixture::sample_query();
        let cfg = OracleConfig { max_users: 2, ..OracleConfig::default() };
        assert!(matches!(oracle_query(&net, &q, &cfg), Err(Error::PoolTooLarge { .. })));
    }
}
