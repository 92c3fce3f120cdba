//! Graphon models: sampling attributed graphs with known latent positions,
//! preset scenarios, and the neighbourhood-average edge-probability
//! estimator.
//!
//! A model draws `U_i ~ Unif[0, 1]`, connects each pair `i < j`
//! independently with probability `rho * W(U_i, U_j)` and emits features
//! `X_i = g(U_i) + eps_i` with Gaussian noise.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::{Graph, KnnGraph};
use crate::rng;

/// Symmetric kernel `W: [0,1]^2 -> [0,1]` before sparsity scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Kernel {
    Constant { value: f64 },
    /// `1{|u - v| < width}`
    Band { width: f64 },
    /// `1 - |u - v|`
    Tent,
    /// `(1 + cos(eta * pi * (u - v))) / 2`
    Cosine { eta: f64 },
    /// Two communities split at `u = 0.5`. Within a community the kernel is
    /// `within * max(0, 1 - |u - v| / bandwidth)`; across it is `between`.
    TwoBlock {
        within: f64,
        between: f64,
        bandwidth: f64,
    },
}

impl Kernel {
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        let d = (u - v).abs();
        match *self {
            Kernel::Constant { value } => value,
            Kernel::Band { width } => {
                if d < width {
                    1.0
                } else {
                    0.0
                }
            }
            Kernel::Tent => 1.0 - d,
            Kernel::Cosine { eta } => (1.0 + (eta * PI * (u - v)).cos()) / 2.0,
            Kernel::TwoBlock {
                within,
                between,
                bandwidth,
            } => {
                if (u < 0.5) == (v < 0.5) {
                    within * (1.0 - d / bandwidth).max(0.0)
                } else {
                    between
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Sparsity {
    Constant { rho: f64 },
    /// `rho_n = log(n) / n`
    LogOverN,
}

impl Sparsity {
    pub fn rho(&self, n: usize) -> f64 {
        match *self {
            Sparsity::Constant { rho } => rho,
            Sparsity::LogOverN => {
                if n < 2 {
                    1.0
                } else {
                    ((n as f64).ln() / n as f64).min(1.0)
                }
            }
        }
    }
}

/// Mean feature map `g: [0,1] -> R^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FeatureMap {
    /// `slope * u` in every coordinate.
    Linear { slope: f64, dim: usize },
    /// `sin(freq * u)` in every coordinate.
    Sine { freq: f64, dim: usize },
    /// `cos(c * pi * u)` in coordinate `c = 1..=dim`.
    Fourier { dim: usize },
}

impl FeatureMap {
    pub fn dim(&self) -> usize {
        match *self {
            FeatureMap::Linear { dim, .. }
            | FeatureMap::Sine { dim, .. }
            | FeatureMap::Fourier { dim } => dim,
        }
    }

    pub fn eval(&self, u: f64, coord: usize) -> f64 {
        match *self {
            FeatureMap::Linear { slope, .. } => slope * u,
            FeatureMap::Sine { freq, .. } => (freq * u).sin(),
            FeatureMap::Fourier { .. } => ((coord + 1) as f64 * PI * u).cos(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphonModel {
    kernel: Kernel,
    sparsity: Sparsity,
    feature_map: FeatureMap,
    noise_sigma: f64,
}

const GRID: usize = 101;

impl GraphonModel {
    /// Validates symmetry and that `rho * W` stays in `[0, 1]` on a
    /// 101 x 101 grid.
    pub fn new(
        kernel: Kernel,
        sparsity: Sparsity,
        feature_map: FeatureMap,
        noise_sigma: f64,
    ) -> Result<Self> {
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(Error::invalid("noise sigma must be finite and non-negative"));
        }
        if feature_map.dim() == 0 {
            return Err(Error::invalid("feature dimension must be at least 1"));
        }
        let rho = match sparsity {
            Sparsity::Constant { rho } => {
                if !(rho > 0.0 && rho <= 1.0) {
                    return Err(Error::invalid(format!("sparsity {rho} not in (0, 1]")));
                }
                rho
            }
            Sparsity::LogOverN => 1.0,
        };
        for a in 0..GRID {
            for b in 0..GRID {
                let (u, v) = (a as f64 / 100.0, b as f64 / 100.0);
                let w = kernel.eval(u, v);
                if !(0.0..=1.0).contains(&(rho * w)) || !w.is_finite() {
                    return Err(Error::invalid(format!(
                        "scaled kernel {} outside [0, 1] at ({u}, {v})",
                        rho * w
                    )));
                }
                if w != kernel.eval(v, u) {
                    return Err(Error::invalid(format!("kernel not symmetric at ({u}, {v})")));
                }
            }
        }
        Ok(Self {
            kernel,
            sparsity,
            feature_map,
            noise_sigma,
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn sparsity(&self) -> Sparsity {
        self.sparsity
    }

    pub fn feature_map(&self) -> &FeatureMap {
        &self.feature_map
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    /// Edge probability `rho_n * W(u, v)` for a graph of `n` nodes.
    pub fn edge_probability(&self, u: f64, v: f64, n: usize) -> f64 {
        self.sparsity.rho(n) * self.kernel.eval(u, v)
    }

    pub fn with_noise_sigma(mut self, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("noise sigma must be finite and non-negative"));
        }
        self.noise_sigma = sigma;
        Ok(self)
    }

    pub fn with_feature_dim(mut self, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("feature dimension must be at least 1"));
        }
        match &mut self.feature_map {
            FeatureMap::Linear { dim: d, .. }
            | FeatureMap::Sine { dim: d, .. }
            | FeatureMap::Fourier { dim: d } => *d = dim,
        }
        Ok(self)
    }

    pub fn with_sparsity(self, sparsity: Sparsity) -> Result<Self> {
        GraphonModel::new(self.kernel, sparsity, self.feature_map, self.noise_sigma)
    }
}

/// Preset scenario identifiers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scenario {
    /// Localised band kernel, linear features `N(5u, 0.1^2)`.
    One,
    /// Tent kernel, oscillatory features `sin(10u) + N(0, 0.1^2)`.
    Two,
    /// Tent kernel, linear features.
    Three,
    /// Band kernel, oscillatory features.
    Four,
    Cosine { eta: f64 },
    /// Two communities with within-community locality and 16 Fourier
    /// features; dense enough for spectral embeddings.
    TwoBlock,
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "1" => Ok(Scenario::One),
            "2" => Ok(Scenario::Two),
            "3" => Ok(Scenario::Three),
            "4" => Ok(Scenario::Four),
            "two-block" | "2-block" => Ok(Scenario::TwoBlock),
            "cosine" => Ok(Scenario::Cosine { eta: 3.0 }),
            _ => {
                if let Some(eta) = s
                    .strip_prefix("cosine:")
                    .or_else(|| s.strip_prefix("cosine="))
                {
                    let eta = eta
                        .parse::<f64>()
                        .map_err(|_| Error::invalid(format!("bad cosine eta {eta:?}")))?;
                    Ok(Scenario::Cosine { eta })
                } else {
                    Err(Error::invalid(format!("unknown scenario {s:?}")))
                }
            }
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::One => write!(f, "1"),
            Scenario::Two => write!(f, "2"),
            Scenario::Three => write!(f, "3"),
            Scenario::Four => write!(f, "4"),
            Scenario::Cosine { eta } => write!(f, "cosine:{eta}"),
            Scenario::TwoBlock => write!(f, "two-block"),
        }
    }
}

pub const PRESET_RHO: f64 = 0.01;
const BAND_WIDTH: f64 = 0.01;

pub fn scenario(id: Scenario) -> GraphonModel {
    let rho = Sparsity::Constant { rho: PRESET_RHO };
    let linear = FeatureMap::Linear { slope: 5.0, dim: 1 };
    let sine = FeatureMap::Sine { freq: 10.0, dim: 1 };
    let band = Kernel::Band { width: BAND_WIDTH };
    let (kernel, sparsity, fmap, sigma) = match id {
        Scenario::One => (band, rho, linear, 0.1),
        Scenario::Two => (Kernel::Tent, rho, sine, 0.1),
        Scenario::Three => (Kernel::Tent, rho, linear, 0.1),
        Scenario::Four => (band, rho, sine, 0.1),
        Scenario::Cosine { eta } => (Kernel::Cosine { eta }, rho, sine, 0.1),
        Scenario::TwoBlock => (
            Kernel::TwoBlock {
                within: 1.0,
                between: 0.02,
                bandwidth: 0.25,
            },
            Sparsity::Constant { rho: 0.2 },
            FeatureMap::Fourier { dim: 16 },
            0.1,
        ),
    };
    GraphonModel::new(kernel, sparsity, fmap, sigma).expect("preset graphon is valid")
}

/// A sampled graph together with its latent positions.
#[derive(Debug, Clone)]
pub struct GraphonSample {
    pub graph: Graph,
    pub latents: Vec<f64>,
}

pub fn sample_graphon(model: &GraphonModel, n: usize, seed: u64) -> Result<GraphonSample> {
    sample_graphon_with(model, n, seed, Exec::default())
}

/// Pair `(i, j)` uses its own counter-based uniform, so the edge set does not
/// depend on how rows are scheduled.
pub fn sample_graphon_with(
    model: &GraphonModel,
    n: usize,
    seed: u64,
    exec: Exec,
) -> Result<GraphonSample> {
    if n == 0 {
        return Err(Error::invalid("graphon sample needs n >= 1"));
    }
    let mut lat_rng = rng::stream(seed, rng::LATENTS);
    let latents: Vec<f64> = (0..n).map(|_| lat_rng.random::<f64>()).collect();
    let rho = model.sparsity.rho(n);
    let edge_seed = rng::mix(seed, rng::EDGES);
    let rows = exec.map(n, |i| {
        let ui = latents[i];
        (i + 1..n)
            .filter(|&j| {
                let p = rho * model.kernel.eval(ui, latents[j]);
                p > 0.0 && rng::uniform_at(edge_seed, i as u64, j as u64) < p
            })
            .map(|j| (i, j))
            .collect::<Vec<_>>()
    });
    let edges: Vec<(usize, usize)> = rows.into_iter().flatten().collect();

    let dim = model.feature_map.dim();
    let mut noise_rng = rng::stream(seed, rng::NOISE);
    let normal = Normal::new(0.0, model.noise_sigma)
        .map_err(|e| Error::invalid(format!("noise distribution: {e}")))?;
    let mut x = DMatrix::zeros(n, dim);
    for i in 0..n {
        for c in 0..dim {
            x[(i, c)] = model.feature_map.eval(latents[i], c) + normal.sample(&mut noise_rng);
        }
    }
    let graph = Graph::from_canonical(n, edges, Some(x));
    Ok(GraphonSample { graph, latents })
}

/// `p_hat_ij = (1/|knn(i)|) * sum_{m in knn(i)} A[m, j]`.
pub fn estimate_edge_probability(g: &Graph, knn: &KnnGraph, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(Error::invalid("estimator needs i != j"));
    }
    if i >= g.n() || j >= g.n() || knn.n() != g.n() {
        return Err(Error::DimensionMismatch(
            "node index or kNN graph does not match the graph".into(),
        ));
    }
    let list = knn.neighbors(i);
    if list.is_empty() {
        return Err(Error::invalid(format!("kNN list of node {i} is empty")));
    }
    let hits = list.iter().filter(|&&m| g.has_edge(m, j)).count();
    Ok(hits as f64 / list.len() as f64)
}

/// Mean absolute error of the estimator against the true `rho * W` over
/// `pairs` random pairs, using oracle latent kNN with `k = ceil(sqrt(n))`.
pub fn estimator_mae(model: &GraphonModel, n: usize, pairs: usize, seed: u64) -> Result<f64> {
    let sample = sample_graphon(model, n, seed)?;
    let k = (n as f64).sqrt().ceil() as usize;
    let knn = crate::knn::oracle_latent_knn(&sample.latents, k)?;
    let mut pick = rng::stream(seed, 0x5041_4952);
    let mut total = 0.0;
    for _ in 0..pairs {
        let i = pick.random_range(0..n);
        let mut j = pick.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let est = estimate_edge_probability(&sample.graph, &knn, i, j)?;
        let truth = model.edge_probability(sample.latents[i], sample.latents[j], n);
        total += (est - truth).abs();
    }
    Ok(total / pairs as f64)
}
