use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};
use sstruss_core::datagen::{gen_network, Distribution, GenConfig};
use sstruss_core::engine::{answer_batch, answer_query_with, Community, QueryOptions, QueryStats};
use sstruss_core::index::{build_index, deserialize_index, serialize_index, IndexConfig, SocialSpatialIndex};
use sstruss_core::io::{load_network, save_network};
use sstruss_core::network::SpatialSocialNetwork;
use sstruss_core::pivots::{PartitionStrategy, PivotSearchConfig};
use sstruss_core::prune::{PruneMode, RuleSet};

mod bench;
mod exit;
mod query_file;
mod verify;

use exit::Coded;

#[derive(Parser)]
#[command(name = "sstruss", version, about = "Topic-based community search over spatial-social networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic network as TSV files.
    Gen(GenArgs),
    /// Build and serialize the social-spatial index.
    Build(BuildArgs),
    /// Answer a query file (one object or an array of objects).
    Query(QueryArgs),
    /// Answer an array of queries with one shared index traversal.
    Batch(QueryArgs),
    /// Sweep the parameter grid for several algorithms and print CSV.
    Bench(bench::BenchArgs),
    /// Run the property suite on random small instances.
    Verify(verify::VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DistArg {
    Uniform,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    SocialSpatial,
    Social,
    Spatial,
}

#[derive(Clone, Copy, Default, ValueEnum)]
pub enum ModeArg {
    #[default]
    Sound,
    PaperLiteral,
}

impl From<ModeArg> for PruneMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Sound => PruneMode::Sound,
            ModeArg::PaperLiteral => PruneMode::PaperLiteral,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 30_000)]
    n_road: usize,
    #[arg(long, default_value_t = 30_000)]
    n_users: usize,
    #[arg(long, value_enum, default_value_t = DistArg::Uniform)]
    dist: DistArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    topics: usize,
    #[arg(long, default_value_t = 1)]
    min_checkins: usize,
    #[arg(long, default_value_t = 3)]
    max_checkins: usize,
    /// Side length of the square holding road vertices.
    #[arg(long, default_value_t = 10.0)]
    extent: f64,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    net: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Number of road pivots.
    #[arg(long, default_value_t = 8)]
    l: usize,
    /// Number of social pivots.
    #[arg(long, default_value_t = 8)]
    h: usize,
    /// Number of leaf groups; defaults to max(4, ceil(M / 64)).
    #[arg(long)]
    iota: Option<usize>,
    #[arg(long, default_value_t = 8)]
    fanout: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Partitioning criterion; `social` and `spatial` build the baseline indexes.
    #[arg(long, value_enum, default_value_t = StrategyArg::SocialSpatial)]
    strategy: StrategyArg,
    /// Pick road pivots that minimize the road cost instead of maximizing it.
    #[arg(long)]
    paper_literal_pivots: bool,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    net: PathBuf,
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    query: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Sound)]
    prune_mode: ModeArg,
    /// Leave out wall-clock timings so output is reproducible.
    #[arg(long)]
    omit_timing: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Build(a) => cmd_build(a),
        Command::Query(a) => cmd_query(a, false),
        Command::Batch(a) => cmd_query(a, true),
        Command::Bench(a) => bench::run(a),
        Command::Verify(a) => verify::run(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit::code_for(&err))
        }
    }
}

pub fn init_threads() {
    if let Some(n) = std::env::var("SSTRUSS_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // fails only if a pool already exists, which keeps the earlier one
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

pub fn print_json(value: &Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

pub fn load_net(dir: &Path) -> Result<SpatialSocialNetwork> {
    load_network(dir).with_context(|| format!("loading network from {}", dir.display()))
}

pub fn load_index(path: &Path) -> Result<SocialSpatialIndex> {
    let bytes = fs::read(path).map_err(|e| Coded::io(anyhow::Error::new(e).context(format!("reading {}", path.display()))))?;
    deserialize_index(&bytes)
        .map_err(|e| Coded::io(anyhow::Error::new(e).context(format!("decoding index {}", path.display()))))
}

fn cmd_gen(a: GenArgs) -> Result<u8> {
    let cfg = GenConfig {
        n_road: a.n_road,
        n_users: a.n_users,
        distribution: match a.dist {
            DistArg::Uniform => Distribution::Uniform,
            DistArg::Gaussian => Distribution::Gaussian,
        },
        topic_count: a.topics,
        checkins_per_user: (a.min_checkins, a.max_checkins),
        extent: a.extent,
        rng_seed: a.seed,
        ..GenConfig::default()
    };
    let net = gen_network(&cfg)?;
    save_network(&net, &a.out)?;
    print_json(&json!({
        "out": a.out,
        "road_vertices": net.road.vertex_count(),
        "road_edges": net.road.edges().len(),
        "users": net.user_count(),
        "social_edges": net.social.edges().len(),
        "topics": net.topic_count(),
        "seed": a.seed,
    }))?;
    Ok(0)
}

fn cmd_build(a: BuildArgs) -> Result<u8> {
    let net = load_net(&a.net)?;
    let cfg = IndexConfig {
        road_pivots: a.l,
        social_pivots: a.h,
        leaf_groups: a.iota,
        fanout: a.fanout,
        search: PivotSearchConfig {
            rng_seed: a.seed,
            minimize_road_cost: a.paper_literal_pivots,
            ..PivotSearchConfig::default()
        },
        strategy: match a.strategy {
            StrategyArg::SocialSpatial => PartitionStrategy::SocialSpatial,
            StrategyArg::Social => PartitionStrategy::Social,
            StrategyArg::Spatial => PartitionStrategy::Spatial,
        },
    };
    let start = Instant::now();
    let idx = build_index(&net, &cfg)?;
    let build_millis = start.elapsed().as_millis() as u64;
    let bytes = serialize_index(&idx);
    fs::write(&a.out, &bytes).map_err(|e| Coded::io(anyhow::Error::new(e).context(format!("writing {}", a.out.display()))))?;
    let leaves = idx.nodes().iter().filter(|n| n.is_leaf()).count();
    print_json(&json!({
        "out": a.out,
        "build_millis": build_millis,
        "bytes": bytes.len(),
        "users": idx.user_count(),
        "nodes": idx.nodes().len(),
        "leaves": leaves,
        "height": idx.height(),
        "road_pivots": idx.road_pivots().pivots,
        "social_pivots": idx.social_pivots().pivots,
        "index_pivots": idx.index_pivots().len(),
        "pivot_costs": idx.costs(),
    }))?;
    Ok(0)
}

pub fn result_json(community: &Community, stats: &QueryStats, omit_timing: bool) -> Value {
    let mut stats_json = json!({
        "cpu_nanos": stats.cpu_nanos,
        "nodes_visited": stats.nodes_visited,
        "candidates": stats.candidates,
        "peel_iterations": stats.peel_iterations,
        "result_size": stats.result_size,
    });
    if omit_timing {
        stats_json.as_object_mut().expect("object").remove("cpu_nanos");
    }
    let mut members = community.members.clone();
    members.sort_unstable();
    json!({
        "members": members,
        "valid": community.valid,
        "certificate": community.certificate,
        "stats": stats_json,
    })
}

fn cmd_query(a: QueryArgs, shared: bool) -> Result<u8> {
    init_threads();
    let net = load_net(&a.net)?;
    let idx = load_index(&a.index)?;
    let queries = query_file::read_queries(&a.query).map_err(Coded::query)?;
    let opts = QueryOptions {
        mode: a.prune_mode.into(),
        rules: RuleSet::ALL,
    };
    let results: Vec<(Community, QueryStats)> = if shared {
        if queries.specs.is_empty() {
            Vec::new()
        } else {
            answer_batch(&net, &idx, &queries.specs, opts)?
        }
    } else {
        queries
            .specs
            .par_iter()
            .enumerate()
            .map(|(i, q)| {
                answer_query_with(&net, &idx, q, opts).map_err(|e| match queries.is_array {
                    true => sstruss_core::Error::BatchQuery {
                        index: i,
                        source: Box::new(e),
                    },
                    false => e,
                })
            })
            .collect::<sstruss_core::Result<Vec<_>>>()?
    };
    let values: Vec<Value> = results.iter().map(|(c, s)| result_json(c, s, a.omit_timing)).collect();
    if queries.is_array || shared {
        print_json(&Value::Array(values))?;
    } else {
        print_json(&values[0])?;
    }
    Ok(0)
}
