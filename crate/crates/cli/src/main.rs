//! `lobstur`: synthesise graphs, draw bootstrap replicas, compare graph
//! statistics, score embeddings and tune embedder hyperparameters.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 external embedder
//! failure.

mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lobstur_core::bootstrap::{Mode, Rewiring};
use lobstur_core::graphon::Scenario;
use lobstur_core::tuner::Pairing;

use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "lobstur",
    version,
    about = "Local bootstrap for attributed graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a graph from a preset graphon scenario.
    Synth(SynthArgs),
    /// Draw bootstrap replicas of a graph.
    Bootstrap(BootstrapArgs),
    /// Compare graph statistics of replicas against the original.
    Stats(StatsArgs),
    /// Score one or two embedding matrices.
    Metrics(MetricsArgs),
    /// Select embedder hyperparameters by replica agreement.
    Tune(TuneArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// 1, 2, 3, 4, cosine[:eta] or two-block.
    #[arg(long)]
    scenario: Scenario,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    /// Constant sparsity factor replacing the preset one.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    feature_dim: Option<usize>,
}

/// kNN construction used by the bootstrap. `solution-1` builds the feature
/// kNN from graph distances and the edge kNN from features; `solution-2`
/// uses graph distances for both.
#[derive(Clone, Copy, Debug, ValueEnum)]
enum KnnSourceArg {
    ShortestPath,
    Jaccard,
    Feature,
    #[value(name = "solution-1")]
    Solution1,
    #[value(name = "solution-2")]
    Solution2,
}

#[derive(Args)]
struct GraphInput {
    /// Directory holding `edges.txt` (and optionally `features.csv`), or an
    /// edge file.
    #[arg(long)]
    graph: PathBuf,
    /// Feature CSV; overrides `features.csv` of a graph directory.
    #[arg(long)]
    features: Option<PathBuf>,
}

#[derive(Args)]
struct BootstrapOpts {
    #[arg(long, default_value = "conditional")]
    mode: Mode,
    #[arg(long, value_enum, default_value = "solution-2")]
    knn_source: KnnSourceArg,
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long, default_value = "exact")]
    rewiring: Rewiring,
}

#[derive(Args)]
struct BootstrapArgs {
    #[command(flatten)]
    input: GraphInput,
    #[command(flatten)]
    opts: BootstrapOpts,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    /// Original graph: directory with `edges.txt` or an edge file.
    #[arg(long)]
    graph: PathBuf,
    /// Directory of `replica_*.edges.txt` files.
    #[arg(long)]
    replicas_dir: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Metric {
    Cca,
    Stablerank,
    Rankme,
    Coherence,
    Kappa,
    Selfcluster,
    Neighbors,
    Ari,
    Nmi,
}

#[derive(Args)]
struct RidgeArgs {
    /// Absolute CCA ridge.
    #[arg(long, conflicts_with = "ridge_relative")]
    ridge: Option<f64>,
    /// CCA ridge as a multiple of trace(cov)/p [default: 1e-6].
    #[arg(long)]
    ridge_relative: Option<f64>,
}

#[derive(Args)]
struct MetricsArgs {
    /// Embedding CSV.
    #[arg(long)]
    a: PathBuf,
    /// Second embedding CSV of the same nodes.
    #[arg(long)]
    b: Option<PathBuf>,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "cca,stablerank"
    )]
    which: Vec<Metric>,
    /// Number of canonical correlations kept.
    #[arg(long)]
    r: Option<usize>,
    #[command(flatten)]
    ridge: RidgeArgs,
    /// Neighbourhood size for the kept-neighbour ratio.
    #[arg(long, default_value_t = 10)]
    neighbors: usize,
    /// Cluster count for k-means before ARI / NMI.
    #[arg(long, default_value_t = 8)]
    clusters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    input: GraphInput,
    /// JSON array of grid entries.
    #[arg(long)]
    grid: PathBuf,
    #[arg(long, default_value_t = 20)]
    n_b: usize,
    #[arg(long, default_value_t = 2.0)]
    threshold: f64,
    /// `builtin` or a shell command template containing `{out}`.
    #[arg(long, default_value = "builtin")]
    embedder: String,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    opts: BootstrapOpts,
    #[arg(long, default_value = "disjoint")]
    pairing: Pairing,
    #[command(flatten)]
    ridge: RidgeArgs,
    /// Per-call limit for external commands, in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Worker cap for training and embedding.
    #[arg(long)]
    max_parallel: Option<usize>,
}

fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var("LOBSTUR_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(CliError::Usage(format!(
                "LOBSTUR_THREADS must be a positive integer, got {v:?}"
            ))),
        },
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    lobstur_core::exec::init_threads(threads_from_env()?);
    match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Bootstrap(a) => commands::bootstrap(a),
        Command::Stats(a) => commands::stats(a),
        Command::Metrics(a) => commands::metrics(a),
        Command::Tune(a) => commands::tune(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lobstur: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
