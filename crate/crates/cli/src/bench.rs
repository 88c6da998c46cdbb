use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;
use sstruss_core::baselines::{build_rindex, build_sindex};
use sstruss_core::engine::{QueryOptions, QueryStats};
use sstruss_core::index::{IndexConfig, SocialSpatialIndex};
use sstruss_core::pivots::PivotSearchConfig;
use sstruss_core::workload::{make_query, sample_query_users, Algo, Answerers, ParamGrid};

use crate::{init_threads, load_index, load_net, ModeArg};

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long)]
    net: PathBuf,
    #[arg(long)]
    index: PathBuf,
    /// JSON parameter grid; defaults to the standard grid.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long, default_value = "engine,greedy,sindex,rindex", value_delimiter = ',')]
    algos: Vec<String>,
    /// Prebuilt social-only index; built on the fly when absent.
    #[arg(long)]
    sindex: Option<PathBuf>,
    /// Prebuilt spatial-only index; built on the fly when absent.
    #[arg(long)]
    rindex: Option<PathBuf>,
    /// Query users per grid point.
    #[arg(long, default_value_t = 20)]
    queries: usize,
    /// Query users need at least this much edge support.
    #[arg(long, default_value_t = 3)]
    min_phi: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Sound)]
    prune_mode: ModeArg,
}

#[derive(Default, Clone, Copy)]
struct Totals {
    cpu_nanos: u64,
    nodes_visited: u64,
    candidates: u64,
    result_size: u64,
}

impl Totals {
    fn add(&mut self, s: &QueryStats) {
        self.cpu_nanos += s.cpu_nanos;
        self.nodes_visited += s.nodes_visited;
        self.candidates += s.candidates;
        self.result_size += s.result_size;
    }
}

fn baseline_index(
    path: &Option<PathBuf>,
    needed: bool,
    build: impl FnOnce() -> sstruss_core::Result<SocialSpatialIndex>,
    name: &str,
) -> Result<Option<SocialSpatialIndex>> {
    match (path, needed) {
        (_, false) => Ok(None),
        (Some(p), true) => load_index(p).map(Some),
        (None, true) => {
            eprintln!("building {name} index");
            Ok(Some(build()?))
        }
    }
}

pub fn run(a: BenchArgs) -> Result<u8> {
    init_threads();
    let algos = a
        .algos
        .iter()
        .map(|s| Algo::parse(s.trim()).with_context(|| format!("unknown algorithm {s:?}")))
        .collect::<Result<Vec<_>>>()?;
    if algos.is_empty() {
        bail!("no algorithms selected");
    }
    let grid: ParamGrid = match &a.grid {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading grid {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing grid {}", p.display()))?
        }
        None => ParamGrid::default(),
    };
    let net = load_net(&a.net)?;
    let engine = load_index(&a.index)?;
    let cfg = IndexConfig {
        road_pivots: engine.road_pivots().len(),
        social_pivots: engine.social_pivots().len(),
        leaf_groups: Some(engine.index_pivots().len()),
        fanout: engine.fanout(),
        search: PivotSearchConfig {
            rng_seed: a.seed,
            ..PivotSearchConfig::default()
        },
        ..IndexConfig::default()
    };
    let sindex = baseline_index(&a.sindex, algos.contains(&Algo::SIndex), || build_sindex(&net, &cfg), "sindex")?;
    let rindex = baseline_index(&a.rindex, algos.contains(&Algo::RIndex), || build_rindex(&net, &cfg), "rindex")?;
    let answerers = Answerers {
        net: &net,
        engine: Some(&engine),
        sindex: sindex.as_ref(),
        rindex: rindex.as_ref(),
        options: QueryOptions {
            mode: a.prune_mode.into(),
            ..QueryOptions::default()
        },
    };
    let users = sample_query_users(&net, a.queries, a.min_phi, a.seed);

    let mut out = std::io::stdout().lock();
    writeln!(out, "algo,param,value,queries,cpu_nanos,nodes_visited,candidates,result_size")?;
    let mut disagreements = 0usize;
    for sp in grid.all_points() {
        let queries = users
            .iter()
            .map(|&q| make_query(&net, q, &sp.point))
            .collect::<sstruss_core::Result<Vec<_>>>()?;
        let mut members: Option<Vec<Vec<u32>>> = None;
        for &algo in &algos {
            let results = queries
                .par_iter()
                .map(|q| answerers.answer(algo, q))
                .collect::<sstruss_core::Result<Vec<_>>>()?;
            let mut totals = Totals::default();
            for (_, s) in &results {
                totals.add(s);
            }
            let sets: Vec<Vec<u32>> = results.into_iter().map(|(c, _)| c.members).collect();
            match &members {
                None => members = Some(sets),
                Some(first) if *first != sets => {
                    disagreements += 1;
                    eprintln!("warning: {algo} disagrees with {} at {}={}", algos[0], sp.param, sp.value);
                }
                Some(_) => {}
            }
            writeln!(
                out,
                "{algo},{},{},{},{},{},{},{}",
                sp.param,
                sp.value,
                queries.len(),
                totals.cpu_nanos,
                totals.nodes_visited,
                totals.candidates,
                totals.result_size
            )?;
        }
    }
    if disagreements > 0 {
        eprintln!("warning: {disagreements} grid points with differing member sets");
    }
    Ok(0)
}
