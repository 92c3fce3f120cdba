//! Core graph types.

use std::collections::HashSet;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected, unweighted simple graph with optional dense node features.
///
/// Edges are stored once as `(u, v)` with `u < v`, sorted. Adjacency lists
/// are derived at construction and kept sorted.
#[derive(Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
    features: Option<DMatrix<f64>>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.n)
            .field("edges", &self.edges.len())
            .field(
                "features",
                &self.features.as_ref().map(|x| (x.nrows(), x.ncols())),
            )
            .finish()
    }
}

impl Graph {
    /// Build a graph from an arbitrary edge list. Edges are symmetrised,
    /// deduplicated, and self-loops are dropped.
    pub fn new<I>(n: usize, edges: I, features: Option<DMatrix<f64>>) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut canon = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            if u != v {
                canon.push((u.min(v), u.max(v)));
            }
        }
        canon.sort_unstable();
        canon.dedup();
        if let Some(x) = &features {
            check_features(x, n)?;
        }
        Ok(Self::from_canonical(n, canon, features))
    }

    /// Edges must already be canonical, sorted and unique.
    pub(crate) fn from_canonical(
        n: usize,
        edges: Vec<(usize, usize)>,
        features: Option<DMatrix<f64>>,
    ) -> Self {
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Self {
            n,
            edges,
            adj,
            features,
        }
    }

    pub fn empty(n: usize) -> Self {
        Self::from_canonical(n, Vec::new(), None)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u != v && self.adj[u].binary_search(&v).is_ok()
    }

    pub fn features(&self) -> Option<&DMatrix<f64>> {
        self.features.as_ref()
    }

    pub fn edge_set(&self) -> HashSet<(usize, usize)> {
        self.edges.iter().copied().collect()
    }

    pub fn with_features(mut self, features: Option<DMatrix<f64>>) -> Result<Self> {
        if let Some(x) = &features {
            check_features(x, self.n)?;
        }
        self.features = features;
        Ok(self)
    }

    /// Dense 0/1 adjacency matrix. Intended for small graphs and oracles.
    pub fn dense_adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(u, v) in &self.edges {
            a[(u, v)] = 1.0;
            a[(v, u)] = 1.0;
        }
        a
    }

    /// Relabel nodes: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "permutation of length {} for {} nodes",
                perm.len(),
                self.n
            )));
        }
        let edges = self.edges.iter().map(|&(u, v)| (perm[u], perm[v]));
        let features = self.features.as_ref().map(|x| {
            let mut y = x.clone();
            for (i, &p) in perm.iter().enumerate() {
                y.set_row(p, &x.row(i));
            }
            y
        });
        Graph::new(self.n, edges, features)
    }
}

fn check_features(x: &DMatrix<f64>, n: usize) -> Result<()> {
    if x.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "feature matrix has {} rows, graph has {n} nodes",
            x.nrows()
        )));
    }
    if n > 0 && x.ncols() == 0 {
        return Err(Error::invalid("feature matrix has no columns"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("feature matrix contains non-finite values"));
    }
    Ok(())
}

/// Which distance a [`KnnGraph`] was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KnnSource {
    GraphShortestPath,
    GraphJaccard,
    FeatureEuclidean,
    OracleLatent,
}

/// Directed k-nearest-neighbour lists, nearest first.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnGraph {
    k: usize,
    lists: Vec<Vec<usize>>,
    source: KnnSource,
}

impl KnnGraph {
    pub(crate) fn from_lists(k: usize, lists: Vec<Vec<usize>>, source: KnnSource) -> Self {
        debug_assert!(lists.iter().enumerate().all(|(i, l)| {
            l.len() <= k && !l.contains(&i) && {
                let mut s = l.clone();
                s.sort_unstable();
                s.dedup();
                s.len() == l.len()
            }
        }));
        Self { k, lists, source }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.lists.len()
    }

    pub fn source(&self) -> KnnSource {
        self.source
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.lists[i]
    }

    pub fn lists(&self) -> &[Vec<usize>] {
        &self.lists
    }
}
