use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use sstruss_core::engine::{answer_query_with, refine, QueryOptions};
use sstruss_core::index::{build_index, IndexConfig, SocialSpatialIndex};
use sstruss_core::io::save_network;
use sstruss_core::metrics::{avg_dist_rn, influence_score, social_hops};
use sstruss_core::network::{QuerySpec, SpatialSocialNetwork, UserId};
use sstruss_core::oracle::{oracle_query, valid_superset, OracleConfig};
use sstruss_core::pivots::PivotSearchConfig;
use sstruss_core::prune::{BoundsContext, RuleSet};
use sstruss_core::datagen::{small_instance, SmallInstanceConfig};
use sstruss_core::workload::{make_query, sample_query_users, GridPoint};

use crate::exit::VERIFY_FAILED;
use crate::query_file::QueryFile;
use crate::{init_threads, load_index, load_net, print_json, ModeArg};

#[derive(Args)]
pub struct VerifyArgs {
    /// Also check a stored network and index against unpruned refinement.
    #[arg(long, requires = "index")]
    net: Option<PathBuf>,
    #[arg(long, requires = "net")]
    index: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pruning rules under test; `paper-literal` is expected to fail.
    #[arg(long, value_enum, default_value_t = ModeArg::Sound)]
    prune_mode: ModeArg,
    /// Where to write the first failing instance; defaults to a directory
    /// under the system temp dir.
    #[arg(long)]
    dump: Option<PathBuf>,
}

const ORACLE: &str = "oracle_equivalence";
const SANDWICH: &str = "bound_sandwich";
const SAFETY: &str = "pruning_safety";
const STORED: &str = "stored_index_agreement";

#[derive(Debug, Clone, Serialize)]
struct Failure {
    trial: usize,
    seed: u64,
    property: &'static str,
    detail: String,
}

#[derive(Default)]
struct TrialReport {
    checks: BTreeMap<&'static str, u64>,
    failures: Vec<Failure>,
}

impl TrialReport {
    fn check(&mut self, property: &'static str, ok: bool, trial: usize, seed: u64, detail: impl FnOnce() -> String) {
        *self.checks.entry(property).or_default() += 1;
        if !ok {
            self.failures.push(Failure {
                trial,
                seed,
                property,
                detail: detail(),
            });
        }
    }
}

fn small_index(net: &SpatialSocialNetwork, seed: u64) -> sstruss_core::Result<SocialSpatialIndex> {
    build_index(
        net,
        &IndexConfig {
            road_pivots: 3,
            social_pivots: 3,
            leaf_groups: Some(3),
            fanout: 2,
            search: PivotSearchConfig {
                global_iter: 2,
                swap_iter: 10,
                rng_seed: seed,
                ..PivotSearchConfig::default()
            },
            ..IndexConfig::default()
        },
    )
}

fn check_bounds(ctx: &BoundsContext, net: &SpatialSocialNetwork, query: &QuerySpec, r: &mut TrialReport, trial: usize, seed: u64) -> sstruss_core::Result<()> {
    let m = net.user_count() as UserId;
    for u in 0..m {
        let hops = social_hops(&net.social, u)?;
        for v in 0..m {
            if u == v {
                continue;
            }
            let avg = avg_dist_rn(net, u, v)?;
            let (lb, ub) = (ctx.lb_avg_dist_rn(u, v), ctx.ub_avg_dist_rn(u, v));
            let slack = 1e-9 * avg.abs().max(1.0);
            r.check(SANDWICH, lb <= avg + slack && avg <= ub + slack, trial, seed, || {
                format!("road distance of ({u},{v}): {lb} <= {avg} <= {ub} fails")
            });
            let h = hops.get(v);
            let (lh, uh) = (ctx.lb_hops(u, v), ctx.ub_hops(u, v));
            r.check(SANDWICH, lh <= h && h <= uh, trial, seed, || {
                format!("hops of ({u},{v}): {lh} <= {h} <= {uh} fails")
            });
            let inf = influence_score(&net.social, u, v, &query.topics, None)?;
            let ub_inf = ctx.ub_inf_score(u, v);
            r.check(SANDWICH, inf <= ub_inf + 1e-12, trial, seed, || {
                format!("influence of ({u},{v}): {inf} exceeds bound {ub_inf}")
            });
        }
    }
    Ok(())
}

fn run_trial(trial: usize, seed: u64, opts: QueryOptions) -> sstruss_core::Result<(TrialReport, SpatialSocialNetwork, QuerySpec)> {
    let (net, query) = small_instance(seed, &SmallInstanceConfig::default());
    let idx = small_index(&net, seed)?;
    let mut r = TrialReport::default();
    let cfg = OracleConfig::default();

    let (community, _) = answer_query_with(&net, &idx, &query, opts)?;
    let best = oracle_query(&net, &query, &cfg)?;
    match &best {
        Some(best) => {
            let superset = if community.valid {
                valid_superset(&net, &query, &community.members, &cfg)?
            } else {
                None
            };
            r.check(ORACLE, community.valid && superset.is_none(), trial, seed, || {
                format!(
                    "engine returned {:?} (valid: {}), oracle best {:?}, valid superset {:?}",
                    community.members, community.valid, best, superset
                )
            });
        }
        None => r.check(ORACLE, !community.valid, trial, seed, || {
            format!("engine claims {:?} valid but no valid community exists", community.members)
        }),
    }

    let ctx = BoundsContext::new(&net, &idx, &query, opts.mode, RuleSet::ALL)?;
    check_bounds(&ctx, &net, &query, &mut r, trial, seed)?;
    for &u in best.iter().flatten() {
        let pruned = ctx.user_prune(u);
        r.check(SAFETY, pruned.is_none(), trial, seed, || {
            format!("user rule {:?} prunes community member {u}", pruned.map(|p| p.rule))
        });
        let leaf = idx.leaf_of(u);
        for node in std::iter::once(leaf).chain(idx.ancestors(leaf)) {
            let pruned = ctx.node_prune(idx.node(node));
            r.check(SAFETY, pruned.is_none(), trial, seed, || {
                format!("node rule {:?} prunes node {node} holding community member {u}", pruned.map(|p| p.rule))
            });
        }
    }
    Ok((r, net, query))
}

fn check_stored(net: &SpatialSocialNetwork, idx: &SocialSpatialIndex, count: usize, seed: u64, opts: QueryOptions) -> sstruss_core::Result<TrialReport> {
    let users = sample_query_users(net, count, 0, seed);
    let everyone: Vec<UserId> = (0..net.user_count() as UserId).collect();
    let reports = users
        .par_iter()
        .enumerate()
        .map(|(i, &q)| {
            let query = make_query(net, q, &GridPoint::default())?;
            let (pruned, _) = answer_query_with(net, idx, &query, opts)?;
            let (full, _) = refine(net, &everyone, &query)?;
            let mut r = TrialReport::default();
            r.check(STORED, pruned.members == full.members, i, seed, || {
                format!("query user {q}: index answer {:?}, unpruned answer {:?}", pruned.members, full.members)
            });
            Ok(r)
        })
        .collect::<sstruss_core::Result<Vec<_>>>()?;
    let mut total = TrialReport::default();
    for r in reports {
        merge(&mut total, r);
    }
    Ok(total)
}

fn merge(total: &mut TrialReport, r: TrialReport) {
    for (k, v) in r.checks {
        *total.checks.entry(k).or_default() += v;
    }
    total.failures.extend(r.failures);
}

pub fn run(a: VerifyArgs) -> Result<u8> {
    init_threads();
    let opts = QueryOptions {
        mode: a.prune_mode.into(),
        rules: RuleSet::ALL,
    };
    if a.trials == 0 {
        eprintln!("warning: zero trials requested, nothing was checked");
    }
    let trials = (0..a.trials)
        .into_par_iter()
        .map(|i| run_trial(i, a.seed.wrapping_add(i as u64), opts))
        .collect::<sstruss_core::Result<Vec<_>>>()?;

    let mut total = TrialReport::default();
    for p in [ORACLE, SANDWICH, SAFETY] {
        total.checks.insert(p, 0);
    }
    let mut reproducer = None;
    for (r, net, query) in trials {
        if reproducer.is_none() && !r.failures.is_empty() {
            reproducer = Some((r.failures[0].seed, net, query));
        }
        merge(&mut total, r);
    }
    if let (Some(net_dir), Some(index_path)) = (&a.net, &a.index) {
        let net = load_net(net_dir)?;
        let idx = load_index(index_path)?;
        let count = a.trials.min(20);
        if count > 0 {
            merge(&mut total, check_stored(&net, &idx, count, a.seed, opts)?);
        }
    }

    let mut failed: BTreeMap<&str, u64> = total.checks.keys().map(|&k| (k, 0)).collect();
    for f in &total.failures {
        *failed.entry(f.property).or_default() += 1;
    }
    let properties: BTreeMap<&str, serde_json::Value> = total
        .checks
        .iter()
        .map(|(&k, &checked)| (k, json!({ "checked": checked, "failed": failed[k] })))
        .collect();
    let passed = total.failures.is_empty();
    let mut report = json!({
        "passed": passed,
        "trials": a.trials,
        "seed": a.seed,
        "prune_mode": opts.mode,
        "properties": properties,
        "failures": total.failures.iter().take(20).collect::<Vec<_>>(),
    });
    if let Some((seed, net, query)) = reproducer {
        let dir = a
            .dump
            .clone()
            .unwrap_or_else(|| std::env::temp_dir().join(format!("sstruss-repro-{seed}")));
        save_network(&net, &dir)?;
        std::fs::write(dir.join("query.json"), serde_json::to_string_pretty(&QueryFile::from_spec(&query))?)?;
        eprintln!("reproducer for seed {seed} written to {}", dir.display());
        report["reproducer"] = json!({ "seed": seed, "dir": dir, "query": QueryFile::from_spec(&query) });
    }
    print_json(&report)?;
    Ok(if passed { 0 } else { VERIFY_FAILED })
}
