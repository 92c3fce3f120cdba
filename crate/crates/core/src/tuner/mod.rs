//! Hyperparameter selection by replica agreement.
//!
//! `3 n_b` bootstrap replicas are drawn. For every grid entry, models are
//! trained on the first `2 n_b`; models `i` and `i + n_b` both embed the
//! held-out replica `i + 2 n_b` and the CCA alignment between the two
//! embeddings is recorded. Entries whose evaluation embeddings have mean
//! stable rank below the threshold are screened out and the smallest mean
//! distance among the rest is selected.

mod builtin;
mod external;

pub use builtin::{
    builtin_apply, builtin_train, laplacian_eigenmap, smooth_features, BuiltinModel, BuiltinParams,
};
pub use external::{external_embed, sha256_hex, ExternalEmbedder, ExternalOutput, DEFAULT_TIMEOUT, PLACEHOLDERS};

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bootstrap::{make_replicas_with, replica_seed, BootstrapConfig};
use crate::error::{Error, Result};
use crate::exec::{with_thread_limit, Exec};
use crate::graph::Graph;
use crate::metrics::{cca_alignment, stable_rank, EmbeddingMatrix, Ridge};
use crate::rng;

pub const DEFAULT_N_B: usize = 20;
pub const DEFAULT_THRESHOLD: f64 = 2.0;

/// One grid entry: a flat key to value map.
pub type Theta = serde_json::Map<String, Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Theta>", into = "Vec<Theta>")]
pub struct HyperGrid(Vec<Theta>);

impl HyperGrid {
    /// Non-empty, and every entry has the same key set.
    pub fn new(entries: Vec<Theta>) -> Result<Self> {
        let first = entries
            .first()
            .ok_or_else(|| Error::invalid("hyperparameter grid is empty"))?;
        let mut keys: Vec<&String> = first.keys().collect();
        keys.sort();
        for (i, t) in entries.iter().enumerate() {
            let mut k: Vec<&String> = t.keys().collect();
            k.sort();
            if k != keys {
                return Err(Error::invalid(format!(
                    "grid entry {i} has keys {k:?}, expected {keys:?}"
                )));
            }
        }
        Ok(Self(entries))
    }

    /// Cartesian product of named axes, the last axis varying fastest.
    pub fn product(axes: &[(&str, Vec<Value>)]) -> Result<Self> {
        let mut entries = vec![Theta::new()];
        for (name, values) in axes {
            entries = entries
                .into_iter()
                .flat_map(|t| {
                    values.iter().map(move |v| {
                        let mut t = t.clone();
                        t.insert(name.to_string(), v.clone());
                        t
                    })
                })
                .collect();
        }
        Self::new(entries)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&s)
    }

    pub fn entries(&self) -> &[Theta] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<Theta>> for HyperGrid {
    type Error = Error;

    fn try_from(v: Vec<Theta>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<HyperGrid> for Vec<Theta> {
    fn from(g: HyperGrid) -> Self {
        g.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbedderSpec {
    Builtin,
    External(ExternalEmbedder),
}

impl EmbedderSpec {
    /// `"builtin"` or a command template.
    pub fn parse(s: &str) -> Result<Self> {
        if s.trim() == "builtin" {
            Ok(Self::Builtin)
        } else {
            Ok(Self::External(ExternalEmbedder::new(s)?))
        }
    }
}

/// How evaluation embeddings are paired on each held-out replica.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    /// Models `i` and `i + n_b` on test replica `i + 2 n_b`.
    #[default]
    Disjoint,
    /// Every one of the `2 n_b` models on every test replica, and every
    /// pair of models compared there.
    AllPairs,
}

impl FromStr for Pairing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disjoint" => Ok(Self::Disjoint),
            "all-pairs" => Ok(Self::AllPairs),
            _ => Err(Error::invalid(format!("unknown pairing \"{s}\" (disjoint, all-pairs)"))),
        }
    }
}

impl fmt::Display for Pairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Disjoint => "disjoint",
            Self::AllPairs => "all-pairs",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneConfig {
    pub n_b: usize,
    pub threshold: f64,
    pub pairing: Pairing,
    pub bootstrap: BootstrapConfig,
    pub cca_ridge: Ridge,
    /// Worker cap for the training matrix; `None` uses every core.
    pub max_parallel: Option<usize>,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            n_b: DEFAULT_N_B,
            threshold: DEFAULT_THRESHOLD,
            pairing: Pairing::Disjoint,
            bootstrap: BootstrapConfig::default(),
            cca_ridge: Ridge::default(),
            max_parallel: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub model: usize,
    pub test: usize,
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaReport {
    pub theta: Theta,
    /// `d_i(theta)` in pair order.
    pub distances: Vec<f64>,
    pub mean_distance: Option<f64>,
    pub stable_ranks: Vec<f64>,
    pub mean_stable_rank: Option<f64>,
    pub passed_screen: bool,
    pub failed: bool,
    pub failures: Vec<CellFailure>,
    /// SHA-256 of each external output file, in evaluation-cell order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub output_hashes: Vec<Option<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningReport {
    pub grid: HyperGrid,
    pub n_b: usize,
    pub threshold: f64,
    pub pairing: Pairing,
    pub embedder: EmbedderSpec,
    pub cca_ridge: Ridge,
    pub bootstrap: BootstrapConfig,
    pub replica_seeds: Vec<u64>,
    pub entries: Vec<ThetaReport>,
    /// Index into the grid of the selected entry.
    pub selected: Option<usize>,
    pub selected_theta: Option<Theta>,
    pub status: String,
}

impl TuningReport {
    /// Every entry failed, so nothing could be evaluated.
    pub fn all_failed(&self) -> bool {
        self.entries.iter().all(|e| e.failed)
    }
}

/// Seed handed to the embedder for model `model` under grid entry `theta`.
pub fn cell_seed(seed: u64, theta: usize, model: usize) -> u64 {
    rng::mix(rng::mix(seed ^ 0x7475_6e65, theta as u64), model as u64)
}

/// Evaluation cells `(model, test)` and the pairs of cells compared.
fn layout(n_b: usize, pairing: Pairing) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let mut cells = Vec::new();
    let mut pairs = Vec::new();
    for i in 0..n_b {
        let test = 2 * n_b + i;
        match pairing {
            Pairing::Disjoint => {
                pairs.push((cells.len(), cells.len() + 1));
                cells.push((i, test));
                cells.push((i + n_b, test));
            }
            Pairing::AllPairs => {
                let base = cells.len();
                cells.extend((0..2 * n_b).map(|m| (m, test)));
                for a in 0..2 * n_b {
                    for b in a + 1..2 * n_b {
                        pairs.push((base + a, base + b));
                    }
                }
            }
        }
    }
    (cells, pairs)
}

enum Embedded {
    Ok(EmbeddingMatrix, Option<String>),
    Failed(CellFailure),
}

pub fn tune(g: &Graph, grid: &HyperGrid, embedder: &EmbedderSpec, cfg: &TuneConfig) -> Result<TuningReport> {
    tune_with(g, grid, embedder, cfg, Exec::default())
}

pub fn tune_with(
    g: &Graph,
    grid: &HyperGrid,
    embedder: &EmbedderSpec,
    cfg: &TuneConfig,
    exec: Exec,
) -> Result<TuningReport> {
    if cfg.n_b == 0 {
        return Err(Error::invalid("n_b must be at least 1"));
    }
    if !cfg.threshold.is_finite() {
        return Err(Error::invalid("stable-rank threshold must be finite"));
    }
    let builtin_params: Vec<BuiltinParams> = match embedder {
        EmbedderSpec::Builtin => {
            if g.features().is_none() {
                return Err(Error::invalid("builtin embedder needs node features"));
            }
            grid.entries().iter().map(BuiltinParams::from_theta).collect::<Result<_>>()?
        }
        EmbedderSpec::External(_) => Vec::new(),
    };
    with_thread_limit(cfg.max_parallel, || {
        let n_rep = 3 * cfg.n_b;
        let replicas = make_replicas_with(g, n_rep, &cfg.bootstrap, exec)?;
        let (cells, pairs) = layout(cfg.n_b, cfg.pairing);
        let n_models = 2 * cfg.n_b;
        let n_theta = grid.len();
        let seed = cfg.bootstrap.seed;

        let embedded: Vec<Embedded> = match embedder {
            EmbedderSpec::Builtin => {
                let models = exec.map(n_theta * n_models, |j| {
                    let (t, m) = (j / n_models, j % n_models);
                    builtin_train(&replicas[m], &builtin_params[t], cell_seed(seed, t, m))
                });
                exec.map(n_theta * cells.len(), |j| {
                    let (t, c) = (j / cells.len(), j % cells.len());
                    let (m, test) = cells[c];
                    let fail = |stage: &str, e: &Error| {
                        Embedded::Failed(CellFailure {
                            model: m,
                            test,
                            stage: stage.into(),
                            message: e.to_string(),
                        })
                    };
                    match &models[t * n_models + m] {
                        Err(e) => fail("train", e),
                        Ok(model) => match builtin_apply(model, &replicas[test]) {
                            Ok(h) => Embedded::Ok(h, None),
                            Err(e) => fail("apply", &e),
                        },
                    }
                })
            }
            EmbedderSpec::External(spec) => exec.map(n_theta * cells.len(), |j| {
                let (t, c) = (j / cells.len(), j % cells.len());
                let (m, test) = cells[c];
                match external_embed(spec, &grid.entries()[t], &replicas[m], &replicas[test], cell_seed(seed, t, m)) {
                    Ok(out) => Embedded::Ok(out.embedding, Some(out.sha256)),
                    Err(e) => Embedded::Failed(CellFailure {
                        model: m,
                        test,
                        stage: "external".into(),
                        message: e.to_string(),
                    }),
                }
            }),
        };

        let entries: Vec<ThetaReport> = exec.map(n_theta, |t| {
            let cells_t = &embedded[t * cells.len()..(t + 1) * cells.len()];
            evaluate(&grid.entries()[t], cells_t, &cells, &pairs, cfg, embedder)
        });

        let selected = entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.passed_screen && !e.failed)
            .filter_map(|(i, e)| e.mean_distance.map(|d| (i, d)))
            .fold(None, |best: Option<(usize, f64)>, (i, d)| match best {
                Some((_, bd)) if bd <= d => best,
                _ => Some((i, d)),
            })
            .map(|(i, _)| i);
        let status = match selected {
            Some(i) => format!("selected grid entry {i}"),
            None if entries.iter().all(|e| e.failed) => "no grid entry could be evaluated".into(),
            None => format!(
                "no grid entry passed the stable-rank screen (threshold {})",
                cfg.threshold
            ),
        };
        Ok(TuningReport {
            grid: grid.clone(),
            n_b: cfg.n_b,
            threshold: cfg.threshold,
            pairing: cfg.pairing,
            embedder: embedder.clone(),
            cca_ridge: cfg.cca_ridge,
            bootstrap: cfg.bootstrap,
            replica_seeds: (0..n_rep).map(|i| replica_seed(seed, i)).collect(),
            selected_theta: selected.map(|i| grid.entries()[i].clone()),
            selected,
            entries,
            status,
        })
    })
}

fn evaluate(
    theta: &Theta,
    embedded: &[Embedded],
    cells: &[(usize, usize)],
    pairs: &[(usize, usize)],
    cfg: &TuneConfig,
    embedder: &EmbedderSpec,
) -> ThetaReport {
    let mut failures: Vec<CellFailure> = embedded
        .iter()
        .filter_map(|e| match e {
            Embedded::Failed(f) => Some(f.clone()),
            Embedded::Ok(..) => None,
        })
        .collect();
    let output_hashes = match embedder {
        EmbedderSpec::External(_) => embedded
            .iter()
            .map(|e| match e {
                Embedded::Ok(_, h) => h.clone(),
                Embedded::Failed(_) => None,
            })
            .collect(),
        EmbedderSpec::Builtin => Vec::new(),
    };
    let mut report = ThetaReport {
        theta: theta.clone(),
        distances: Vec::new(),
        mean_distance: None,
        stable_ranks: Vec::new(),
        mean_stable_rank: None,
        passed_screen: false,
        failed: true,
        failures: Vec::new(),
        output_hashes,
    };
    if !failures.is_empty() {
        report.failures = failures;
        return report;
    }
    let h: Vec<&EmbeddingMatrix> = embedded
        .iter()
        .map(|e| match e {
            Embedded::Ok(h, _) => h,
            Embedded::Failed(_) => unreachable!(),
        })
        .collect();
    for (c, hc) in h.iter().enumerate() {
        match stable_rank(hc) {
            Ok(s) => report.stable_ranks.push(s),
            Err(e) => failures.push(CellFailure {
                model: cells[c].0,
                test: cells[c].1,
                stage: "stable-rank".into(),
                message: e.to_string(),
            }),
        }
    }
    for &(a, b) in pairs {
        match cca_alignment(h[a], h[b], None, cfg.cca_ridge) {
            Ok(r) => report.distances.push(r.alignment),
            Err(e) => failures.push(CellFailure {
                model: cells[a].0,
                test: cells[a].1,
                stage: format!("cca with model {}", cells[b].0),
                message: e.to_string(),
            }),
        }
    }
    if !failures.is_empty() {
        report.failures = failures;
        return report;
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let msr = mean(&report.stable_ranks);
    report.failed = false;
    report.mean_distance = Some(mean(&report.distances));
    report.mean_stable_rank = Some(msr);
    report.passed_screen = msr >= cfg.threshold;
    report
}
