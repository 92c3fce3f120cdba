//! Network bootstrap for random-dot-product-style graphs: resample rows of
//! the adjacency spectral embedding and regenerate edges from their inner
//! products.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::knn::RowMajor;
use crate::linalg::adjacency_top_eigen;
use crate::rng;

/// Adjacency spectral embedding: top-`d` eigenvectors by eigenvalue
/// magnitude, column `c` scaled by `sqrt(|lambda_c|)`.
pub fn spectral_embedding(g: &Graph, d: usize, seed: u64) -> Result<DMatrix<f64>> {
    let (vals, mut vecs) = adjacency_top_eigen(g, d, seed)?;
    for (c, l) in vals.iter().enumerate() {
        let s = l.abs().sqrt();
        vecs.column_mut(c).scale_mut(s);
    }
    Ok(vecs)
}

pub fn network_bootstrap(g: &Graph, d: usize, k: usize, seed: u64) -> Result<Graph> {
    let h = spectral_embedding(g, d, rng::mix(seed, 0x4153_45))?;
    network_bootstrap_from_embedding(g, &h, k, seed)
}

/// Same as [`network_bootstrap`] with a precomputed embedding, so several
/// replicas can share one eigendecomposition.
pub fn network_bootstrap_from_embedding(
    g: &Graph,
    h: &DMatrix<f64>,
    k: usize,
    seed: u64,
) -> Result<Graph> {
    let n = g.n();
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if h.nrows() != n {
        return Err(Error::DimensionMismatch("embedding rows must equal node count".into()));
    }
    let mut r = rng::stream(seed, rng::ORIGINS);
    let idx: Vec<usize> = (0..n).map(|_| r.random_range(0..n)).collect();
    let rows = RowMajor::new(h);
    let edge_seed = rng::mix(seed, rng::EDGES);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let dot: f64 = rows.row(idx[i]).iter().zip(rows.row(idx[j])).map(|(a, b)| a * b).sum();
            let p = dot.clamp(0.0, 1.0);
            if p > 0.0 && rng::uniform_at(edge_seed, i as u64, j as u64) < p {
                edges.push((i, j));
            }
        }
    }
    let features = match g.features() {
        Some(x) if n >= 2 => {
            let mut fr = rng::stream(seed, rng::FEATURES);
            let mut out = DMatrix::zeros(n, x.ncols());
            for (i, &o) in idx.iter().enumerate() {
                let near = rows.nearest(o, k.min(n - 1));
                let src = near[fr.random_range(0..near.len())];
                out.set_row(i, &x.row(src));
            }
            Some(out)
        }
        Some(x) => Some(x.clone()),
        None => None,
    };
    Ok(Graph::from_canonical(n, edges, features))
}
