use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::ValueEnum;
use lobstur_core::bootstrap::{replica_seed, BootstrapConfig, Bootstrapper, KnnChoice};
use lobstur_core::exec::Exec;
use lobstur_core::graphon::{sample_graphon, scenario, Sparsity};
use lobstur_core::metrics::{
    ari, cca_alignment, coherence, kmeans, neighbor_kept_ratio, nmi, pseudo_condition, rank_me,
    self_cluster, stable_rank, EmbeddingMatrix, Ridge, RANK_ME_EPS,
};
use lobstur_core::stats::stats_report;
use lobstur_core::tuner::{self, EmbedderSpec, HyperGrid, TuneConfig};
use lobstur_core::{io, DMatrix, Graph};
use serde_json::{json, Map, Value};

use crate::error::{CliError, CliResult};
use crate::output::{emit_report, Manifest, Staging};
use crate::{
    BootstrapArgs, BootstrapOpts, GraphInput, KnnSourceArg, Metric, MetricsArgs, RidgeArgs,
    StatsArgs, SynthArgs, TuneArgs,
};

const EDGES: &str = "edges.txt";
const FEATURES: &str = "features.csv";

/// Edge file and optional feature file behind a `--graph` argument.
fn graph_paths(graph: &Path, features: Option<&Path>) -> CliResult<(PathBuf, Option<PathBuf>)> {
    if graph.is_dir() {
        let edges = graph.join(EDGES);
        if !edges.is_file() {
            return Err(CliError::data(format!("{} not found", edges.display())));
        }
        let feats = match features {
            Some(f) => Some(f.to_path_buf()),
            None => Some(graph.join(FEATURES)).filter(|p| p.is_file()),
        };
        Ok((edges, feats))
    } else if graph.is_file() {
        Ok((graph.to_path_buf(), features.map(Path::to_path_buf)))
    } else {
        Err(CliError::data(format!("{} not found", graph.display())))
    }
}

fn load_input(input: &GraphInput, manifest: &mut Manifest) -> CliResult<Graph> {
    let (edges, feats) = graph_paths(&input.graph, input.features.as_deref())?;
    manifest.input("edges", &edges)?;
    if let Some(f) = &feats {
        manifest.input("features", f)?;
    }
    Ok(io::load_graph(&edges, feats.as_deref())?)
}

fn bootstrap_config(opts: &BootstrapOpts, seed: u64) -> BootstrapConfig {
    let (knn_for_features, knn_for_edges) = match opts.knn_source {
        KnnSourceArg::ShortestPath | KnnSourceArg::Solution2 => {
            (KnnChoice::ShortestPath, KnnChoice::ShortestPath)
        }
        KnnSourceArg::Solution1 => (KnnChoice::ShortestPath, KnnChoice::Feature),
        KnnSourceArg::Jaccard => (KnnChoice::Jaccard, KnnChoice::Jaccard),
        KnnSourceArg::Feature => (KnnChoice::Feature, KnnChoice::Feature),
    };
    BootstrapConfig {
        mode: opts.mode,
        knn_for_features,
        knn_for_edges,
        k: opts.k,
        rewiring: opts.rewiring,
        seed,
    }
}

fn ridge(args: &RidgeArgs) -> Ridge {
    match (args.ridge, args.ridge_relative) {
        (Some(v), _) => Ridge::Absolute(v),
        (None, Some(v)) => Ridge::RelativeToTrace(v),
        (None, None) => Ridge::default(),
    }
}

fn value_name<T: ValueEnum>(v: T) -> String {
    v.to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_string()
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("config serialises")
}

pub fn synth(a: SynthArgs) -> CliResult<()> {
    let mut model = scenario(a.scenario);
    if let Some(rho) = a.rho {
        model = model.with_sparsity(Sparsity::Constant { rho })?;
    }
    if let Some(s) = a.noise_sigma {
        model = model.with_noise_sigma(s)?;
    }
    if let Some(d) = a.feature_dim {
        model = model.with_feature_dim(d)?;
    }
    let sample = sample_graphon(&model, a.n, a.seed)?;
    let staging = Staging::new(&a.out_dir)?;
    io::save_graph(
        &sample.graph,
        &staging.path(EDGES),
        Some(&staging.path(FEATURES)),
    )?;
    let latents = DMatrix::from_column_slice(a.n, 1, &sample.latents);
    io::save_matrix(&latents, &staging.path("latents.csv"))?;
    let config = json!({
        "scenario": a.scenario.to_string(),
        "n": a.n,
        "model": to_json(&model),
        "num_edges": sample.graph.num_edges(),
    });
    staging.commit(&Manifest::new("synth", config, Some(a.seed)))
}

pub fn bootstrap(a: BootstrapArgs) -> CliResult<()> {
    if a.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let cfg = bootstrap_config(&a.opts, a.seed);
    let config = json!({
        "count": a.count,
        "knn_source": value_name(a.opts.knn_source),
        "bootstrap": to_json(&cfg),
    });
    let mut manifest = Manifest::new("bootstrap", config, Some(a.seed));
    let g = load_input(&a.input, &mut manifest)?;
    let replicas = Bootstrapper::new(&g, cfg)?.replicas(a.count, Exec::default())?;

    let staging = Staging::new(&a.out_dir)?;
    let mut seeds = Vec::with_capacity(a.count);
    for (i, r) in replicas.iter().enumerate() {
        let edges = staging.path(&format!("replica_{i:04}.edges.txt"));
        let feats = staging.path(&format!("replica_{i:04}.features.csv"));
        io::save_graph(r, &edges, r.features().map(|_| feats.as_path()))?;
        seeds.push(replica_seed(a.seed, i));
    }
    let manifest = manifest.derived_seeds(json!({ "replicas": seeds }));
    staging.commit(&manifest)
}

fn replica_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::data(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("replica_") && n.ends_with(".edges.txt"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::data(format!(
            "no replica_*.edges.txt files in {}",
            dir.display()
        )));
    }
    Ok(files)
}

pub fn stats(a: StatsArgs) -> CliResult<()> {
    let mut manifest = Manifest::new(
        "stats",
        json!({ "replicas_dir": a.replicas_dir.display().to_string() }),
        None,
    );
    let (edges, _) = graph_paths(&a.graph, None)?;
    manifest.input("original", &edges)?;
    let original = io::load_graph(&edges, None)?;
    let files = replica_files(&a.replicas_dir)?;
    let mut replicas = Vec::with_capacity(files.len());
    for f in &files {
        manifest.input("replica", f)?;
        replicas.push(io::load_graph(f, None)?);
    }
    let report = stats_report(&original, &replicas)?;
    emit_report(&a.out, &report.to_json(), &manifest)
}

fn load_embedding(path: &Path, manifest: &mut Manifest, role: &str) -> CliResult<EmbeddingMatrix> {
    manifest.input(role, path)?;
    Ok(EmbeddingMatrix::new(io::load_matrix(path)?)?)
}

pub fn metrics(a: MetricsArgs) -> CliResult<()> {
    let needs_b = a.which.iter().any(|m| {
        matches!(
            m,
            Metric::Cca | Metric::Neighbors | Metric::Ari | Metric::Nmi
        )
    });
    if needs_b && a.b.is_none() {
        return Err(CliError::Usage(
            "cca, neighbors, ari and nmi need --b".into(),
        ));
    }
    let ridge = ridge(&a.ridge);
    let which: Vec<String> = a.which.iter().map(|&m| value_name(m)).collect();
    let mut manifest = Manifest::new(
        "metrics",
        json!({
            "which": which,
            "r": a.r,
            "ridge": to_json(&ridge),
            "neighbors": a.neighbors,
            "clusters": a.clusters,
            "rank_me_eps": RANK_ME_EPS,
        }),
        Some(a.seed),
    );
    let ha = load_embedding(&a.a, &mut manifest, "a")?;
    let hb =
        a.b.as_deref()
            .map(|b| load_embedding(b, &mut manifest, "b"))
            .transpose()?;

    let mut out = Map::new();
    let mut both =
        |name: &str, f: &dyn Fn(&EmbeddingMatrix) -> lobstur_core::Result<f64>| -> CliResult<()> {
            out.insert(format!("{name}_a"), json!(f(&ha)?));
            if let Some(hb) = &hb {
                out.insert(format!("{name}_b"), json!(f(hb)?));
            }
            Ok(())
        };
    for m in &a.which {
        match m {
            Metric::Stablerank => both("stable_rank", &stable_rank)?,
            Metric::Rankme => both("rank_me", &|h| rank_me(h, RANK_ME_EPS))?,
            Metric::Coherence => both("coherence", &coherence)?,
            Metric::Kappa => both("pseudo_condition", &pseudo_condition)?,
            Metric::Selfcluster => both("self_cluster", &self_cluster)?,
            _ => {}
        }
    }
    if let Some(hb) = &hb {
        let labels = if a
            .which
            .iter()
            .any(|m| matches!(m, Metric::Ari | Metric::Nmi))
        {
            Some((
                kmeans(&ha, a.clusters, a.seed)?,
                kmeans(hb, a.clusters, a.seed)?,
            ))
        } else {
            None
        };
        for m in &a.which {
            match m {
                Metric::Cca => {
                    let c = cca_alignment(&ha, hb, a.r, ridge)?;
                    out.insert("cca_alignment".into(), json!(c.alignment));
                    out.insert("cca_correlations".into(), json!(c.correlations));
                    out.insert("cca_r".into(), json!(c.r));
                }
                Metric::Neighbors => {
                    out.insert(
                        "neighbor_kept_ratio".into(),
                        json!(neighbor_kept_ratio(&ha, hb, a.neighbors)?),
                    );
                }
                Metric::Ari => {
                    let (la, lb) = labels.as_ref().expect("labels computed");
                    out.insert("ari".into(), json!(ari(la, lb)?));
                }
                Metric::Nmi => {
                    let (la, lb) = labels.as_ref().expect("labels computed");
                    out.insert("nmi".into(), json!(nmi(la, lb)?));
                }
                _ => {}
            }
        }
    }
    emit_report(&a.out, &Value::Object(out), &manifest)
}

pub fn tune(a: TuneArgs) -> CliResult<()> {
    let mut spec = EmbedderSpec::parse(&a.embedder).map_err(|e| CliError::Usage(e.to_string()))?;
    if let (EmbedderSpec::External(ext), Some(t)) = (&spec, a.timeout) {
        let t = Duration::try_from_secs_f64(t)
            .map_err(|_| CliError::Usage(format!("bad --timeout {t}")))?;
        spec = EmbedderSpec::External(ext.clone().with_timeout(t));
    }
    let cfg = TuneConfig {
        n_b: a.n_b,
        threshold: a.threshold,
        pairing: a.pairing,
        bootstrap: bootstrap_config(&a.opts, a.seed),
        cca_ridge: ridge(&a.ridge),
        max_parallel: a.max_parallel,
    };
    let mut manifest = Manifest::new(
        "tune",
        json!({
            "tune": to_json(&cfg),
            "knn_source": value_name(a.opts.knn_source),
            "embedder": to_json(&spec),
        }),
        Some(a.seed),
    );
    let g = load_input(&a.input, &mut manifest)?;
    manifest.input("grid", &a.grid)?;
    let grid = HyperGrid::from_file(&a.grid)?;
    let report = tuner::tune(&g, &grid, &spec, &cfg)?;
    let manifest = manifest.derived_seeds(json!({ "replicas": report.replica_seeds }));
    emit_report(&a.out, &to_json(&report), &manifest)?;
    if matches!(spec, EmbedderSpec::External(_)) && report.all_failed() {
        return Err(CliError::Embedder(format!(
            "every grid entry failed; see {}",
            a.out.display()
        )));
    }
    Ok(())
}
