//! Graph replica generators.
//!
//! The main entry point is [`Bootstrapper`], which precomputes the kNN
//! graphs named by a [`BootstrapConfig`] and then produces independent
//! replicas from derived seeds. The individual steps ([`resample_features`],
//! [`rewire_edges`], [`rewire_edges_approx`]) are exposed for direct use.
//! [`block`], [`network`] and [`baselines`] hold the alternative resamplers
//! used for comparison.

pub mod baselines;
pub mod block;
pub mod network;
mod pool;
mod rewire;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::{Graph, KnnGraph};
use crate::knn;
use crate::rng;

pub use rewire::RewireTrace;
use rewire::CandidateSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Conditional,
    Marginal,
}

/// Distance used to build a kNN graph from the observed data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KnnChoice {
    ShortestPath,
    Jaccard,
    Feature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rewiring {
    Exact,
    ApproxA2,
}

macro_rules! kebab_enum {
    ($ty:ident { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($ty::$variant),)+
                    _ => Err(Error::invalid(format!(
                        concat!("unknown ", stringify!($ty), " {:?}"), s
                    ))),
                }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($ty::$variant => $name,)+ })
            }
        }
    };
}

kebab_enum!(Mode { Conditional => "conditional", Marginal => "marginal" });
kebab_enum!(KnnChoice { ShortestPath => "shortest-path", Jaccard => "jaccard", Feature => "feature" });
kebab_enum!(Rewiring { Exact => "exact", ApproxA2 => "approx-a2" });

pub const DEFAULT_K: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub mode: Mode,
    pub knn_for_features: KnnChoice,
    pub knn_for_edges: KnnChoice,
    pub k: usize,
    pub rewiring: Rewiring,
    pub seed: u64,
}

impl BootstrapConfig {
    /// Graph-distance kNN for features, feature kNN for edges.
    pub fn solution_1(k: usize, seed: u64) -> Self {
        Self {
            mode: Mode::Conditional,
            knn_for_features: KnnChoice::ShortestPath,
            knn_for_edges: KnnChoice::Feature,
            k,
            rewiring: Rewiring::Exact,
            seed,
        }
    }

    /// Graph-distance kNN for both features and edges.
    pub fn solution_2(k: usize, seed: u64) -> Self {
        Self {
            knn_for_edges: KnnChoice::ShortestPath,
            ..Self::solution_1(k, seed)
        }
    }

    pub fn with_mode(self, mode: Mode) -> Self {
        Self { mode, ..self }
    }

    pub fn with_rewiring(self, rewiring: Rewiring) -> Self {
        Self { rewiring, ..self }
    }
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self::solution_2(DEFAULT_K, 0)
    }
}

/// Seed of replica `index` under base seed `seed`.
pub fn replica_seed(seed: u64, index: usize) -> u64 {
    rng::mix(seed, index as u64)
}

pub fn build_knn(g: &Graph, choice: KnnChoice, k: usize, exec: Exec) -> Result<KnnGraph> {
    match choice {
        KnnChoice::ShortestPath => knn::shortest_path_knn_with(g, k, exec),
        KnnChoice::Jaccard => knn::jaccard_knn_with(g, k, exec),
        KnnChoice::Feature => {
            let x = g
                .features()
                .ok_or_else(|| Error::invalid("feature kNN requested but graph has no features"))?;
            if g.n() < 2 {
                return Ok(KnnGraph::from_lists(
                    k,
                    vec![Vec::new(); g.n()],
                    crate::graph::KnnSource::FeatureEuclidean,
                ));
            }
            knn::feature_knn_with(x, k.min(g.n() - 1), exec)
        }
    }
}

/// Redraw every feature row uniformly from `{X_i} ∪ {X_j : j in knn(i)}`.
pub fn resample_features(g: &Graph, knn: &KnnGraph, seed: u64) -> Result<DMatrix<f64>> {
    check_knn(g, knn)?;
    let origin: Vec<usize> = (0..g.n()).collect();
    resample_features_mapped(g, knn, &origin, seed)
}

fn resample_features_mapped(
    g: &Graph,
    knn: &KnnGraph,
    origin: &[usize],
    seed: u64,
) -> Result<DMatrix<f64>> {
    let x = g
        .features()
        .ok_or_else(|| Error::invalid("graph has no features to resample"))?;
    let mut rng = rng::stream(seed, rng::FEATURES);
    let mut out = DMatrix::zeros(origin.len(), x.ncols());
    for (r, &o) in origin.iter().enumerate() {
        let list = knn.neighbors(o);
        let pick = rng.random_range(0..=list.len());
        let src = if pick == 0 { o } else { list[pick - 1] };
        out.set_row(r, &x.row(src));
    }
    Ok(out)
}

/// Stem-matching rewiring guided by `knn`. Returns a simple edge set with
/// at most `|E|` edges.
pub fn rewire_edges(g: &Graph, knn: &KnnGraph, seed: u64) -> Result<Vec<(usize, usize)>> {
    Ok(rewire_edges_traced(g, knn, seed)?.0)
}

pub fn rewire_edges_traced(
    g: &Graph,
    knn: &KnnGraph,
    seed: u64,
) -> Result<(Vec<(usize, usize)>, RewireTrace)> {
    check_knn(g, knn)?;
    let origin: Vec<usize> = (0..g.n()).collect();
    Ok(rewire::rewire(g, CandidateSource::Knn(knn), &origin, seed))
}

/// Rewiring that draws partners in proportion to two-hop walk counts
/// `(A^2)_{uv}`, without a kNN graph.
pub fn rewire_edges_approx(g: &Graph, seed: u64) -> Vec<(usize, usize)> {
    let origin: Vec<usize> = (0..g.n()).collect();
    rewire::rewire(g, CandidateSource::TwoHop, &origin, seed).0
}

fn check_knn(g: &Graph, knn: &KnnGraph) -> Result<()> {
    if knn.n() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "kNN graph over {} nodes, graph has {}",
            knn.n(),
            g.n()
        )));
    }
    Ok(())
}

/// Replica generator with its kNN graphs precomputed.
#[derive(Debug, Clone)]
pub struct Bootstrapper<'g> {
    graph: &'g Graph,
    cfg: BootstrapConfig,
    feature_knn: Option<KnnGraph>,
    edge_knn: Option<KnnGraph>,
}

impl<'g> Bootstrapper<'g> {
    pub fn new(graph: &'g Graph, cfg: BootstrapConfig) -> Result<Self> {
        Self::with_exec(graph, cfg, Exec::default())
    }

    pub fn with_exec(graph: &'g Graph, cfg: BootstrapConfig, exec: Exec) -> Result<Self> {
        if cfg.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        let feature_knn = match graph.features() {
            Some(_) => Some(build_knn(graph, cfg.knn_for_features, cfg.k, exec)?),
            None => None,
        };
        let edge_knn = match cfg.rewiring {
            Rewiring::ApproxA2 => None,
            Rewiring::Exact => match &feature_knn {
                Some(fk) if cfg.knn_for_edges == cfg.knn_for_features => Some(fk.clone()),
                _ => Some(build_knn(graph, cfg.knn_for_edges, cfg.k, exec)?),
            },
        };
        Ok(Self {
            graph,
            cfg,
            feature_knn,
            edge_knn,
        })
    }

    /// Directly supply kNN graphs, e.g. oracle latent neighbours.
    pub fn from_knn(
        graph: &'g Graph,
        cfg: BootstrapConfig,
        feature_knn: Option<KnnGraph>,
        edge_knn: KnnGraph,
    ) -> Result<Self> {
        check_knn(graph, &edge_knn)?;
        if let Some(fk) = &feature_knn {
            check_knn(graph, fk)?;
        }
        Ok(Self {
            graph,
            cfg,
            feature_knn,
            edge_knn: Some(edge_knn),
        })
    }

    pub fn config(&self) -> &BootstrapConfig {
        &self.cfg
    }

    pub fn edge_knn(&self) -> Option<&KnnGraph> {
        self.edge_knn.as_ref()
    }

    /// One replica under the configured mode.
    pub fn replica(&self, seed: u64) -> Result<Graph> {
        Ok(self.replica_traced(seed)?.0)
    }

    pub fn replica_traced(&self, seed: u64) -> Result<(Graph, RewireTrace)> {
        let n = self.graph.n();
        let origin: Vec<usize> = match self.cfg.mode {
            Mode::Conditional => (0..n).collect(),
            Mode::Marginal => draw_origins(n, seed),
        };
        self.replica_with_origins(&origin, seed)
    }

    /// Replica whose node `j` is a copy of input node `origin[j]`.
    pub fn replica_with_origins(
        &self,
        origin: &[usize],
        seed: u64,
    ) -> Result<(Graph, RewireTrace)> {
        let g = self.graph;
        if origin.len() != g.n() || origin.iter().any(|&o| o >= g.n()) {
            return Err(Error::invalid("origin map must have n entries in [0, n)"));
        }
        let features = match &self.feature_knn {
            Some(fk) => Some(resample_features_mapped(g, fk, origin, seed)?),
            None => None,
        };
        let source = match &self.edge_knn {
            Some(ek) => CandidateSource::Knn(ek),
            None => CandidateSource::TwoHop,
        };
        let (edges, trace) = rewire::rewire(g, source, origin, seed);
        Ok((Graph::from_canonical(g.n(), edges, features), trace))
    }

    pub fn replicas(&self, count: usize, exec: Exec) -> Result<Vec<Graph>> {
        if count == 0 {
            return Err(Error::invalid("replica count must be at least 1"));
        }
        exec.map(count, |i| self.replica(replica_seed(self.cfg.seed, i)))
            .into_iter()
            .collect()
    }
}

/// Origins for a marginal replica: `n` draws with replacement.
pub fn draw_origins(n: usize, seed: u64) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let mut rng = rng::stream(seed, rng::ORIGINS);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

pub fn bootstrap_conditional(g: &Graph, cfg: &BootstrapConfig) -> Result<Graph> {
    let cfg = cfg.with_mode(Mode::Conditional);
    Bootstrapper::new(g, cfg)?.replica(cfg.seed)
}

pub fn bootstrap_marginal(g: &Graph, cfg: &BootstrapConfig) -> Result<Graph> {
    let cfg = cfg.with_mode(Mode::Marginal);
    Bootstrapper::new(g, cfg)?.replica(cfg.seed)
}

/// `count` replicas with seeds `replica_seed(cfg.seed, i)`.
pub fn make_replicas(g: &Graph, count: usize, cfg: &BootstrapConfig) -> Result<Vec<Graph>> {
    make_replicas_with(g, count, cfg, Exec::default())
}

pub fn make_replicas_with(
    g: &Graph,
    count: usize,
    cfg: &BootstrapConfig,
    exec: Exec,
) -> Result<Vec<Graph>> {
    Bootstrapper::with_exec(g, *cfg, exec)?.replicas(count, exec)
}
