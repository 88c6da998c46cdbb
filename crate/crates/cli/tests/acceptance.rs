//! Acceptance suite. Each test prints one `PASS`/`FAIL` line straight to
//! stdout (bypassing the harness capture) and then asserts.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sstruss_core::baselines::{build_rindex, build_sindex};
use sstruss_core::datagen::{gen_network, small_instance, GenConfig, SmallInstanceConfig};
use sstruss_core::engine::{answer_query, QueryOptions};
use sstruss_core::fixture;
use sstruss_core::index::{build_index, deserialize_index, serialize_index, IndexConfig, SocialSpatialIndex};
use sstruss_core::io::save_network;
use sstruss_core::metrics::{compute_supports, influence_score, truss_peel, truss_peel_shuffled};
use sstruss_core::network::{
    KeywordSet, QuerySpec, QueryTopicVector, SocialNetwork, SpatialSocialNetwork, TopicEdge, User, UserId,
    DEFAULT_KEYWORD_BITS,
};
use sstruss_core::oracle::{oracle_query, valid_superset, OracleConfig};
use sstruss_core::pivots::PivotSearchConfig;
use sstruss_core::prune::{BoundsContext, PruneMode, RuleSet};
use sstruss_core::workload::{make_query, sample_query_users, Algo, Answerers, Param, ParamGrid, SweepPoint};

const ORACLE_INSTANCES: u64 = 300;
const ORACLE_TIME_LIMIT_SECS: f64 = 300.0;
const SANDWICH_INSTANCES: u64 = 50;
const SANDWICH_USERS: usize = 30;
const INFLUENCE_BOUND_GRAPHS: u64 = 50;
const TRUSS_GRAPHS: u64 = 100;
const INFLUENCE_GRAPHS: u64 = 200;
const INFLUENCE_REL_TOL: f64 = 1e-9;
const NESTED_PAIRS: u64 = 100;
const LARGE_USERS: usize = 10_000;
const LARGE_QUERIES: usize = 20;
const MAX_DEFAULT_CANDIDATES: f64 = 50.0;
const MIN_MONOTONE_FRACTION: f64 = 0.75;

fn report(id: u32, name: &str, passed: bool, detail: &str) {
    let mut out = std::io::stdout().lock();
    let verdict = if passed { "PASS" } else { "FAIL" };
    let _ = writeln!(out, "\nacceptance {id} {name}: {verdict} ({detail})");
}

fn small_index(net: &SpatialSocialNetwork, seed: u64) -> SocialSpatialIndex {
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
    .unwrap()
}

struct OracleCase {
    net: SpatialSocialNetwork,
    query: QuerySpec,
    index: SocialSpatialIndex,
    best: Option<Vec<UserId>>,
    engine: Vec<UserId>,
    engine_valid: bool,
}

struct OracleSuite {
    cases: Vec<OracleCase>,
    seconds: f64,
}

fn oracle_suite() -> &'static OracleSuite {
    static SUITE: OnceLock<OracleSuite> = OnceLock::new();
    SUITE.get_or_init(|| {
        let start = Instant::now();
        let cases = (0..ORACLE_INSTANCES)
            .map(|seed| {
                let (net, query) = small_instance(seed, &SmallInstanceConfig::default());
                let index = small_index(&net, seed);
                let (c, _) = answer_query(&net, &index, &query).unwrap();
                let best = oracle_query(&net, &query, &OracleConfig::default()).unwrap();
                OracleCase {
                    net,
                    query,
                    index,
                    best,
                    engine: c.members,
                    engine_valid: c.valid,
                }
            })
            .collect();
        OracleSuite {
            cases,
            seconds: start.elapsed().as_secs_f64(),
        }
    })
}

#[test]
fn criterion_1_oracle_equivalence() {
    let suite = oracle_suite();
    let mut failures = Vec::new();
    let mut nontrivial = 0;
    for (i, c) in suite.cases.iter().enumerate() {
        let ok = match &c.best {
            Some(best) => {
                nontrivial += usize::from(best.len() > 1);
                c.engine_valid
                    && valid_superset(&c.net, &c.query, &c.engine, &OracleConfig::default())
                        .unwrap()
                        .is_none()
            }
            None => !c.engine_valid,
        };
        if !ok {
            failures.push(i);
        }
    }
    let passed = failures.is_empty() && suite.seconds < ORACLE_TIME_LIMIT_SECS;
    report(
        1,
        "oracle equivalence",
        passed,
        &format!(
            "{} instances, {nontrivial} with multi-user optimum, {} failures, {:.1}s",
            suite.cases.len(),
            failures.len(),
            suite.seconds
        ),
    );
    assert!(passed, "failing instances: {failures:?}");
}

fn road_apsp(net: &SpatialSocialNetwork) -> Vec<Vec<f64>> {
    let n = net.road.vertex_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for e in net.road.edges() {
        let (a, b) = (e.src as usize, e.dst as usize);
        d[a][b] = d[a][b].min(e.length);
        d[b][a] = d[b][a].min(e.length);
    }
    for m in 0..n {
        for a in 0..n {
            for b in 0..n {
                let via = d[a][m] + d[m][b];
                if via < d[a][b] {
                    d[a][b] = via;
                }
            }
        }
    }
    d
}

fn hops_from(net: &SpatialSocialNetwork, s: UserId) -> Vec<u32> {
    let m = net.user_count();
    let mut adj = vec![Vec::new(); m];
    for e in net.social.edges() {
        adj[e.src as usize].push(e.dst);
        adj[e.dst as usize].push(e.src);
    }
    let mut dist = vec![u32::MAX; m];
    dist[s as usize] = 0;
    let mut queue = VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        for &w in &adj[u as usize] {
            if dist[w as usize] == u32::MAX {
                dist[w as usize] = dist[u as usize] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Best path product from `u` to `v` over simple paths inside `allowed`.
fn exhaustive_influence(edges: &[TopicEdge], t: &[f64], u: UserId, v: UserId, allowed: &dyn Fn(UserId) -> bool) -> f64 {
    let mut out: HashMap<UserId, Vec<(UserId, f64)>> = HashMap::new();
    for e in edges {
        let f: f64 = e.weights.iter().zip(t).map(|(w, x)| w * x).sum();
        out.entry(e.src).or_default().push((e.dst, f));
    }
    fn dfs(
        out: &HashMap<UserId, Vec<(UserId, f64)>>,
        at: UserId,
        target: UserId,
        acc: f64,
        seen: &mut BTreeSet<UserId>,
        allowed: &dyn Fn(UserId) -> bool,
        best: &mut f64,
    ) {
        if at == target {
            *best = best.max(acc);
            return;
        }
        for &(w, f) in out.get(&at).into_iter().flatten() {
            if allowed(w) && seen.insert(w) {
                dfs(out, w, target, acc * f, seen, allowed, best);
                seen.remove(&w);
            }
        }
    }
    let mut best = 0.0;
    dfs(&out, u, v, 1.0, &mut BTreeSet::from([u]), allowed, &mut best);
    best
}

#[test]
fn criterion_2_bound_sandwiches() {
    let mut pairs = 0u64;
    let mut violations = Vec::new();
    for seed in 0..SANDWICH_INSTANCES {
        let net = gen_network(&GenConfig {
            n_road: 80,
            n_users: SANDWICH_USERS,
            rng_seed: seed,
            ..GenConfig::default()
        })
        .unwrap();
        let idx = build_index(&net, &IndexConfig::default()).unwrap();
        let query = make_query(&net, 0, &Default::default()).unwrap();
        let ctx = BoundsContext::new(&net, &idx, &query, PruneMode::Sound, RuleSet::ALL).unwrap();
        let apsp = road_apsp(&net);
        for u in 0..SANDWICH_USERS as UserId {
            let hops = hops_from(&net, u);
            for v in 0..SANDWICH_USERS as UserId {
                if u == v {
                    continue;
                }
                pairs += 1;
                let (cu, cv) = (&net.user(u).checkins, &net.user(v).checkins);
                let total: f64 = cu
                    .iter()
                    .flat_map(|a| cv.iter().map(|b| apsp[a.road_vertex as usize][b.road_vertex as usize]))
                    .sum();
                let avg = total / (cu.len() * cv.len()) as f64;
                let slack = 1e-9 * avg.max(1.0);
                let (lb, ub) = (ctx.lb_avg_dist_rn(u, v), ctx.ub_avg_dist_rn(u, v));
                if !(lb <= avg + slack && avg <= ub + slack) {
                    violations.push(format!("seed {seed} road ({u},{v}): {lb} {avg} {ub}"));
                }
                let h = hops[v as usize];
                let (lh, uh) = (ctx.lb_hops(u, v), ctx.ub_hops(u, v));
                if !(lh <= h && h <= uh) {
                    violations.push(format!("seed {seed} hops ({u},{v}): {lh} {h} {uh}"));
                }
            }
        }
    }
    let mut inf_pairs = 0u64;
    for seed in 0..INFLUENCE_BOUND_GRAPHS {
        let (net, query) = small_instance(
            1_000 + seed,
            &SmallInstanceConfig {
                max_users: 10,
                ..SmallInstanceConfig::default()
            },
        );
        let idx = small_index(&net, seed);
        let ctx = BoundsContext::new(&net, &idx, &query, PruneMode::Sound, RuleSet::ALL).unwrap();
        let m = net.user_count() as UserId;
        for u in 0..m {
            for v in (0..m).filter(|&v| v != u) {
                inf_pairs += 1;
                let exact = exhaustive_influence(net.social.edges(), query.topics.weights(), u, v, &|_| true);
                let bound = ctx.ub_inf_score(u, v);
                if exact > bound + 1e-12 {
                    violations.push(format!("seed {seed} influence ({u},{v}): {exact} > {bound}"));
                }
            }
        }
    }
    let passed = violations.is_empty();
    report(
        2,
        "bound sandwiches",
        passed,
        &format!("{pairs} distance pairs, {inf_pairs} influence pairs, {} violations", violations.len()),
    );
    assert!(passed, "{:?}", &violations[..violations.len().min(10)]);
}

fn random_social(rng: &mut ChaCha8Rng, n: usize, p: f64, topics: usize) -> SocialNetwork {
    let users = (0..n as UserId)
        .map(|id| User {
            id,
            keywords: KeywordSet::new([1], DEFAULT_KEYWORD_BITS),
            checkins: Vec::new(),
        })
        .collect();
    let mut edges = Vec::new();
    for a in 0..n as UserId {
        for b in a + 1..n as UserId {
            if rng.random_bool(p) {
                let dirs = match rng.random_range(0..3) {
                    0 => vec![(a, b)],
                    1 => vec![(b, a)],
                    _ => vec![(a, b), (b, a)],
                };
                for (src, dst) in dirs {
                    let weights = (0..topics).map(|_| rng.random_range(0.0..=1.0)).collect();
                    edges.push(TopicEdge { src, dst, weights });
                }
            }
        }
    }
    SocialNetwork::new(users, edges, topics)
}

fn undirected_matrix(net: &SocialNetwork) -> Vec<Vec<bool>> {
    let n = net.user_count();
    let mut adj = vec![vec![false; n]; n];
    for e in net.edges() {
        adj[e.src as usize][e.dst as usize] = true;
        adj[e.dst as usize][e.src as usize] = true;
    }
    adj
}

fn naive_truss(adj: &[Vec<bool>], k: u32) -> BTreeSet<(UserId, UserId)> {
    let n = adj.len();
    let mut edges: BTreeSet<(usize, usize)> =
        (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).filter(|&(a, b)| adj[a][b]).collect();
    let need = k.saturating_sub(2) as usize;
    loop {
        let has = |a: usize, b: usize| edges.contains(&(a.min(b), a.max(b)));
        let weak: Vec<(usize, usize)> = edges
            .iter()
            .copied()
            .filter(|&(a, b)| (0..n).filter(|&w| w != a && w != b && has(a, w) && has(b, w)).count() < need)
            .collect();
        if weak.is_empty() {
            break;
        }
        for e in weak {
            edges.remove(&e);
        }
    }
    edges.into_iter().map(|(a, b)| (a as UserId, b as UserId)).collect()
}

#[test]
fn criterion_3_truss_correctness() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = Vec::new();
    for g in 0..TRUSS_GRAPHS {
        let n = rng.random_range(3..=50);
        let p = rng.random_range(0.05..0.6);
        let net = random_social(&mut rng, n, p, 1);
        let adj = undirected_matrix(&net);
        let sup = compute_supports(&net);
        for a in 0..n {
            let mut phi = 0;
            for b in 0..n {
                if a == b || !adj[a][b] {
                    continue;
                }
                let count = (0..n).filter(|&w| w != a && w != b && adj[a][w] && adj[b][w]).count() as u32;
                phi = phi.max(count);
                if sup.support(a as UserId, b as UserId) != Some(count) {
                    mismatches.push(format!("graph {g} support ({a},{b})"));
                }
            }
            if sup.phi(a as UserId) != phi {
                mismatches.push(format!("graph {g} phi {a}"));
            }
        }
        let all: BTreeSet<UserId> = (0..n as UserId).collect();
        for k in 3..=6 {
            let expected = naive_truss(&adj, k);
            if truss_peel(&net, &all, k) != expected || truss_peel_shuffled(&net, &all, k, g) != expected {
                mismatches.push(format!("graph {g} truss k={k}"));
            }
        }
    }
    let passed = mismatches.is_empty();
    report(3, "truss correctness", passed, &format!("{TRUSS_GRAPHS} graphs, {} mismatches", mismatches.len()));
    assert!(passed, "{mismatches:?}");
}

#[test]
fn criterion_4_influence_algorithm() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0u64;
    let mut mismatches = Vec::new();
    for g in 0..INFLUENCE_GRAPHS {
        let n = rng.random_range(2..=10);
        let p = rng.random_range(0.2..0.8);
        let net = random_social(&mut rng, n, p, 3);
        let t = QueryTopicVector::new((0..3).map(|_| rng.random_range(0.01..1.0)).collect()).unwrap();
        let subset: BTreeSet<UserId> = (0..n as UserId).filter(|_| rng.random_bool(0.7)).collect();
        for u in 0..n as UserId {
            for v in (0..n as UserId).filter(|&v| v != u) {
                let cases: [(Option<&BTreeSet<UserId>>, bool); 2] =
                    [(None, true), (Some(&subset), subset.contains(&u) && subset.contains(&v))];
                for (within, applicable) in cases {
                    if !applicable {
                        continue;
                    }
                    checked += 1;
                    let fast = influence_score(&net, u, v, &t, within).unwrap();
                    let slow = exhaustive_influence(net.edges(), t.weights(), u, v, &|w| {
                        within.is_none_or(|s| s.contains(&w))
                    });
                    if (fast - slow).abs() > INFLUENCE_REL_TOL * slow.abs().max(f64::MIN_POSITIVE) {
                        mismatches.push(format!("graph {g} ({u},{v}) within={}: {fast} vs {slow}", within.is_some()));
                    }
                }
            }
        }
    }
    let passed = mismatches.is_empty();
    report(
        4,
        "influence algorithm",
        passed,
        &format!("{INFLUENCE_GRAPHS} graphs, {checked} pairs, {} mismatches", mismatches.len()),
    );
    assert!(passed, "{:?}", &mismatches[..mismatches.len().min(10)]);
}

#[test]
fn criterion_5_safety_sweep() {
    let suite = oracle_suite();
    let mut checked = 0u64;
    let mut violations = Vec::new();
    for (i, c) in suite.cases.iter().enumerate() {
        let Some(best) = &c.best else { continue };
        let ctx = BoundsContext::new(&c.net, &c.index, &c.query, PruneMode::Sound, RuleSet::ALL).unwrap();
        for &u in best {
            checked += 1;
            if let Some(d) = ctx.user_prune(u) {
                violations.push(format!("instance {i}: user rule {:?} prunes {u}", d.rule));
            }
            let leaf = c.index.leaf_of(u);
            for node in std::iter::once(leaf).chain(c.index.ancestors(leaf)) {
                if let Some(d) = ctx.node_prune(c.index.node(node)) {
                    violations.push(format!("instance {i}: node rule {:?} prunes node {node} holding {u}", d.rule));
                }
            }
        }
    }
    let passed = violations.is_empty();
    report(
        5,
        "safety sweep",
        passed,
        &format!("{checked} community members checked, {} violations", violations.len()),
    );
    assert!(passed, "{violations:?}");
}

#[test]
fn criterion_6_nested_relaxation() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut compared = 0u64;
    let mut violations = Vec::new();
    for i in 0..NESTED_PAIRS {
        let seed = 20_000 + i;
        let (net, base) = small_instance(seed, &SmallInstanceConfig::default());
        let idx = small_index(&net, seed);
        let relaxed = QuerySpec {
            k: rng.random_range(2..=base.k),
            d: if base.d == u32::MAX { base.d } else { base.d + rng.random_range(0..=2) },
            sigma: base.sigma * rng.random_range(1.0..1.5),
            theta: base.theta * rng.random_range(0.5..=1.0),
            ..base.clone()
        };
        let (small, _) = answer_query(&net, &idx, &base).unwrap();
        let (large, _) = answer_query(&net, &idx, &relaxed).unwrap();
        if !small.valid {
            continue;
        }
        compared += 1;
        let large_set: BTreeSet<UserId> = large.members.iter().copied().collect();
        if !small.members.iter().all(|u| large_set.contains(u)) {
            let best = oracle_query(&net, &relaxed, &OracleConfig::default()).unwrap().unwrap_or_default();
            violations.push(format!(
                "seed {seed}: {:?} not within {:?} (largest relaxed community {:?})",
                small.members, large.members, best
            ));
        }
    }
    let passed = violations.is_empty();
    report(
        6,
        "nested relaxation",
        passed,
        &format!("{NESTED_PAIRS} pairs, {compared} with a valid base community, {} violations", violations.len()),
    );
    assert!(passed, "{violations:?}");
}

#[derive(Default, Clone, Copy, Debug)]
struct Totals {
    nodes_visited: u64,
    candidates: u64,
    result_size: u64,
    queries: u64,
}

struct LargeRun {
    points: Vec<(SweepPoint, HashMap<Algo, Totals>, bool)>,
}

fn large_run() -> &'static LargeRun {
    static RUN: OnceLock<LargeRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let net = gen_network(&GenConfig {
            n_road: LARGE_USERS,
            n_users: LARGE_USERS,
            rng_seed: 7,
            ..GenConfig::default()
        })
        .unwrap();
        let cfg = IndexConfig::default();
        let engine = build_index(&net, &cfg).unwrap();
        let sindex = build_sindex(&net, &cfg).unwrap();
        let rindex = build_rindex(&net, &cfg).unwrap();
        let answerers = Answerers {
            net: &net,
            engine: Some(&engine),
            sindex: Some(&sindex),
            rindex: Some(&rindex),
            options: QueryOptions::default(),
        };
        let users = sample_query_users(&net, LARGE_QUERIES, 3, 11);
        let points = ParamGrid::default()
            .all_points()
            .into_iter()
            .map(|sp| {
                let queries: Vec<QuerySpec> = users.iter().map(|&q| make_query(&net, q, &sp.point).unwrap()).collect();
                let mut totals = HashMap::new();
                let mut members: Option<Vec<Vec<UserId>>> = None;
                let mut agree = true;
                for algo in Algo::ALL {
                    let mut t = Totals::default();
                    let mut sets = Vec::new();
                    for q in &queries {
                        let (c, s) = answerers.answer(algo, q).unwrap();
                        t.nodes_visited += s.nodes_visited;
                        t.candidates += s.candidates;
                        t.result_size += s.result_size;
                        t.queries += 1;
                        sets.push(c.members);
                    }
                    match &members {
                        None => members = Some(sets),
                        Some(first) => agree &= *first == sets,
                    }
                    totals.insert(algo, t);
                }
                (sp, totals, agree)
            })
            .collect();
        LargeRun { points }
    })
}

#[test]
fn criterion_7_baseline_agreement() {
    let run = large_run();
    let disagreeing: Vec<String> = run
        .points
        .iter()
        .filter(|(_, _, agree)| !agree)
        .map(|(sp, _, _)| format!("{}={}", sp.param, sp.value))
        .collect();
    let defaults = ParamGrid::default().defaults;
    let (_, at_default, _) = run
        .points
        .iter()
        .find(|(sp, _, _)| sp.point == defaults)
        .expect("default point is on the grid");
    let engine = at_default[&Algo::Engine];
    let sindex = at_default[&Algo::SIndex];
    let rindex = at_default[&Algo::RIndex];
    let greedy = at_default[&Algo::Greedy];
    let mean_candidates = engine.candidates as f64 / engine.queries as f64;
    let nodes_ok = engine.nodes_visited <= sindex.nodes_visited && engine.nodes_visited <= rindex.nodes_visited;
    let passed = disagreeing.is_empty() && nodes_ok && mean_candidates <= MAX_DEFAULT_CANDIDATES;
    report(
        7,
        "baseline agreement",
        passed,
        &format!(
            "{} grid points, disagreeing {:?}; nodes at default engine {} sindex {} rindex {} (greedy users touched {}); mean candidates {:.1}",
            run.points.len(),
            disagreeing,
            engine.nodes_visited,
            sindex.nodes_visited,
            rindex.nodes_visited,
            greedy.nodes_visited,
            mean_candidates
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_8_qualitative_trends() {
    let run = large_run();
    let mut lines = Vec::new();
    let mut passed = true;
    for (param, increasing) in [
        (Param::Sigma, true),
        (Param::D, true),
        (Param::Keywords, true),
        (Param::K, false),
        (Param::Theta, false),
    ] {
        let series: Vec<u64> = run
            .points
            .iter()
            .filter(|(sp, _, _)| sp.param == param)
            .map(|(_, t, _)| t[&Algo::Engine].nodes_visited)
            .collect();
        let steps = series.len() - 1;
        let good = series
            .windows(2)
            .filter(|w| if increasing { w[1] >= w[0] } else { w[1] <= w[0] })
            .count();
        let ok = good as f64 >= MIN_MONOTONE_FRACTION * steps as f64;
        passed &= ok;
        lines.push(format!("{param} {series:?} {good}/{steps}"));
    }
    report(8, "qualitative trends", passed, &lines.join("; "));
    assert!(passed);
}

fn sstruss(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sstruss")).args(args).output().expect("run sstruss")
}

fn read_dir_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_9_determinism_and_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let p = |name: &str| tmp.path().join(name).to_string_lossy().into_owned();
    let mut problems = Vec::new();

    for dir in ["gen_a", "gen_b"] {
        let out = sstruss(&["gen", "--out", &p(dir), "--n-road", "400", "--n-users", "300", "--seed", "7"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let gen_a = read_dir_files(&tmp.path().join("gen_a"));
    if gen_a != read_dir_files(&tmp.path().join("gen_b")) || gen_a.len() != 5 {
        problems.push("regenerated TSVs differ");
    }

    for file in ["a.ssix", "b.ssix"] {
        let out = sstruss(&["build", "--net", &p("gen_a"), "--out", &p(file), "--seed", "3"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let bytes = std::fs::read(p("a.ssix")).unwrap();
    if bytes != std::fs::read(p("b.ssix")).unwrap() {
        problems.push("rebuilt index bytes differ");
    }
    let idx = deserialize_index(&bytes).unwrap();
    if serialize_index(&idx) != bytes {
        problems.push("serialize(deserialize(bytes)) != bytes");
    }
    for seed in 0..5 {
        let (net, _) = small_instance(seed, &SmallInstanceConfig::default());
        let idx = small_index(&net, seed);
        if deserialize_index(&serialize_index(&idx)).unwrap() != idx {
            problems.push("deserialize(serialize(index)) != index");
        }
    }

    save_network(&fixture::sample_network(), &tmp.path().join("fig")).unwrap();
    let out = sstruss(&["build", "--net", &p("fig"), "--out", &p("fig.ssix"), "--iota", "3", "--fanout", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let query = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/sample_query.json");
    let golden = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/sample_result.json")).unwrap();
    let q = query.to_string_lossy();
    let args = ["query", "--net", &p("fig"), "--index", &p("fig.ssix"), "--query", &q, "--omit-timing"];
    let first = sstruss(&args);
    let second = sstruss(&args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    if first.stdout != second.stdout {
        problems.push("query output differs between runs");
    }
    if String::from_utf8_lossy(&first.stdout) != golden {
        problems.push("query output differs from the golden file");
    }

    let passed = problems.is_empty();
    report(9, "determinism and round trips", passed, &format!("problems: {problems:?}"));
    assert!(passed, "{problems:?}");
}
