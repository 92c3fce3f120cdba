//! Spatial block bootstrap: shuffle square grid cells, then rebuild a graph
//! from the shuffled coordinates.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::knn::{feature_knn, RowMajor};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphBuilder {
    /// Symmetrised Euclidean kNN.
    Knn(usize),
    /// All pairs within distance `r` (inclusive).
    Radius(f64),
}

impl GraphBuilder {
    pub fn build(&self, coords: &DMatrix<f64>) -> Result<Graph> {
        let n = coords.nrows();
        let edges: Vec<(usize, usize)> = match *self {
            GraphBuilder::Knn(k) => {
                if n < 2 {
                    Vec::new()
                } else {
                    let knn = feature_knn(coords, k.min(n - 1))?;
                    knn.lists()
                        .iter()
                        .enumerate()
                        .flat_map(|(i, l)| l.iter().map(move |&j| (i, j)))
                        .collect()
                }
            }
            GraphBuilder::Radius(r) => {
                if !(r >= 0.0) {
                    return Err(Error::invalid("radius must be non-negative"));
                }
                let rows = RowMajor::new(coords);
                let r2 = r * r;
                (0..n)
                    .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                    .filter(|&(i, j)| rows.sq_dist(i, j) <= r2)
                    .collect()
            }
        };
        Graph::new(n, edges, Some(coords.clone()))
    }
}

/// Move every point into a randomly permuted cell, keeping its offset
/// within the cell.
pub fn shuffle_cells(coords: &DMatrix<f64>, grid_size: f64, seed: u64) -> Result<DMatrix<f64>> {
    if !(grid_size > 0.0 && grid_size.is_finite()) {
        return Err(Error::invalid("grid size must be positive"));
    }
    if coords.ncols() != 2 {
        return Err(Error::DimensionMismatch("block bootstrap needs n x 2 coordinates".into()));
    }
    if coords.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("coordinates must be finite"));
    }
    let n = coords.nrows();
    if n == 0 {
        return Ok(coords.clone());
    }
    let lo = [coords.column(0).min(), coords.column(1).min()];
    let hi = [coords.column(0).max(), coords.column(1).max()];
    let cells = |d: usize| (((hi[d] - lo[d]) / grid_size).ceil() as usize).max(1);
    let (cx, cy) = (cells(0), cells(1));
    let cell_of = |v: f64, d: usize, nc: usize| (((v - lo[d]) / grid_size) as usize).min(nc - 1);

    let mut perm: Vec<usize> = (0..cx * cy).collect();
    perm.shuffle(&mut rng::stream(seed, rng::SHUFFLE));

    let mut out = coords.clone();
    for i in 0..n {
        let (a, b) = (cell_of(coords[(i, 0)], 0, cx), cell_of(coords[(i, 1)], 1, cy));
        let target = perm[a * cy + b];
        let (ta, tb) = (target / cy, target % cy);
        out[(i, 0)] = coords[(i, 0)] + (ta as f64 - a as f64) * grid_size;
        out[(i, 1)] = coords[(i, 1)] + (tb as f64 - b as f64) * grid_size;
    }
    Ok(out)
}

/// Shuffle cells and rebuild. The returned graph carries the shuffled
/// coordinates as its features.
pub fn block_bootstrap(
    coords: &DMatrix<f64>,
    grid_size: f64,
    builder: GraphBuilder,
    seed: u64,
) -> Result<Graph> {
    let shuffled = shuffle_cells(coords, grid_size, seed)?;
    builder.build(&shuffled)
}
