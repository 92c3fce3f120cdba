//! k-nearest-neighbour graph construction.
//!
//! Every builder breaks exact distance ties by ascending node id, so all
//! outputs are deterministic. Nodes with fewer than `k` eligible peers get
//! shorter lists.

use std::cmp::Ordering;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::{Graph, KnnGraph, KnnSource};

/// Hop-distance kNN via breadth-first search. Unreachable nodes are never
/// listed.
pub fn shortest_path_knn(g: &Graph, k: usize) -> Result<KnnGraph> {
    shortest_path_knn_with(g, k, Exec::default())
}

pub fn shortest_path_knn_with(g: &Graph, k: usize, exec: Exec) -> Result<KnnGraph> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let lists = exec.map(g.n(), |src| bfs_nearest(g, src, k));
    Ok(KnnGraph::from_lists(k, lists, KnnSource::GraphShortestPath))
}

fn bfs_nearest(g: &Graph, src: usize, k: usize) -> Vec<usize> {
    let mut seen = vec![false; g.n()];
    seen[src] = true;
    let mut out = Vec::with_capacity(k);
    let mut frontier = vec![src];
    while !frontier.is_empty() && out.len() < k {
        let mut next = Vec::new();
        for &u in &frontier {
            for &v in g.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    next.push(v);
                }
            }
        }
        next.sort_unstable();
        let take = (k - out.len()).min(next.len());
        out.extend_from_slice(&next[..take]);
        frontier = next;
    }
    out
}

/// Jaccard distance over closed neighbourhoods (each node counts as its own
/// neighbour). Pairs with zero overlap are excluded.
pub fn jaccard_knn(g: &Graph, k: usize) -> Result<KnnGraph> {
    jaccard_knn_with(g, k, Exec::default())
}

pub fn jaccard_knn_with(g: &Graph, k: usize, exec: Exec) -> Result<KnnGraph> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let n = g.n();
    let closed = |i: usize| std::iter::once(i).chain(g.neighbors(i).iter().copied());
    let lists = exec.map(n, |i| {
        let mut counts: std::collections::HashMap<usize, usize> = Default::default();
        for w in closed(i) {
            for j in closed(w) {
                if j != i {
                    *counts.entry(j).or_insert(0) += 1;
                }
            }
        }
        let size_i = g.degree(i) + 1;
        let mut scored: Vec<(f64, usize)> = counts
            .into_iter()
            .map(|(j, c)| {
                let union = size_i + g.degree(j) + 1 - c;
                (c as f64 / union as f64, j)
            })
            .collect();
        scored.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        scored.truncate(k);
        scored.into_iter().map(|(_, j)| j).collect()
    });
    Ok(KnnGraph::from_lists(k, lists, KnnSource::GraphJaccard))
}

/// Exact Euclidean kNN over the rows of `x`.
pub fn feature_knn(x: &DMatrix<f64>, k: usize) -> Result<KnnGraph> {
    feature_knn_with(x, k, Exec::default())
}

pub fn feature_knn_with(x: &DMatrix<f64>, k: usize, exec: Exec) -> Result<KnnGraph> {
    let n = x.nrows();
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if n < 2 {
        return Err(Error::invalid("feature kNN needs at least two rows"));
    }
    if k > n - 1 {
        return Err(Error::invalid(format!("k = {k} exceeds n - 1 = {}", n - 1)));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("feature matrix contains non-finite values"));
    }
    let rows = RowMajor::new(x);
    let lists = exec.map(n, |i| rows.nearest(i, k));
    Ok(KnnGraph::from_lists(k, lists, KnnSource::FeatureEuclidean))
}

/// kNN on scalar latent positions, for oracle experiments on graphon
/// samples. Runs in `O(n log n + n k)` using the sorted order.
pub fn oracle_latent_knn(latents: &[f64], k: usize) -> Result<KnnGraph> {
    let n = latents.len();
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if latents.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("latent positions must be finite"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| latents[a].total_cmp(&latents[b]).then(a.cmp(&b)));
    let mut pos = vec![0; n];
    for (p, &i) in order.iter().enumerate() {
        pos[i] = p;
    }
    let lists = (0..n)
        .map(|i| {
            let d = |j: usize| (latents[i] - latents[j]).abs();
            let mut cand: Vec<(f64, usize)> = Vec::with_capacity(2 * k + 2);
            // walk outwards on each side, collecting k items plus any ties
            // with the last one collected
            for dir in [-1isize, 1] {
                let mut p = pos[i] as isize + dir;
                let mut taken = 0;
                let mut last = f64::NAN;
                while p >= 0 && (p as usize) < n {
                    let j = order[p as usize];
                    let dj = d(j);
                    if taken >= k && dj != last {
                        break;
                    }
                    cand.push((dj, j));
                    taken += 1;
                    last = dj;
                    p += dir;
                }
            }
            cand.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cand.truncate(k);
            cand.into_iter().map(|(_, j)| j).collect()
        })
        .collect();
    Ok(KnnGraph::from_lists(k, lists, KnnSource::OracleLatent))
}

/// Row-major copy of a matrix for cache-friendly distance loops.
pub(crate) struct RowMajor {
    data: Vec<f64>,
    n: usize,
    p: usize,
}

impl RowMajor {
    pub(crate) fn new(x: &DMatrix<f64>) -> Self {
        let (n, p) = x.shape();
        let mut data = Vec::with_capacity(n * p);
        for i in 0..n {
            data.extend(x.row(i).iter());
        }
        Self { data, n, p }
    }

    pub(crate) fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub(crate) fn sq_dist(&self, i: usize, j: usize) -> f64 {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// The `k` nearest other rows to row `i`, by (distance, id).
    pub(crate) fn nearest(&self, i: usize, k: usize) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = (0..self.n)
            .filter(|&j| j != i)
            .map(|j| (self.sq_dist(i, j), j))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
        };
        let k = k.min(d.len());
        if k == 0 {
            return Vec::new();
        }
        if k < d.len() {
            d.select_nth_unstable_by(k - 1, cmp);
            d.truncate(k);
        }
        d.sort_unstable_by(cmp);
        d.into_iter().map(|(_, j)| j).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        Graph::new(3, [(0, 1), (1, 2)], None).unwrap()
    }

    #[test]
    fn shortest_path_examples() {
        let g = path3();
        let k1 = shortest_path_knn(&g, 1).unwrap();
        assert_eq!(k1.lists(), &[vec![1], vec![0], vec![1]]);
        let k2 = shortest_path_knn(&g, 2).unwrap();
        assert_eq!(k2.lists(), &[vec![1, 2], vec![0, 2], vec![1, 0]]);
        let g = Graph::new(4, [(0, 1), (2, 3)], None).unwrap();
        let k3 = shortest_path_knn(&g, 3).unwrap();
        assert_eq!(k3.neighbors(0), &[1]);
        assert!(shortest_path_knn(&g, 0).is_err());
    }

    #[test]
    fn jaccard_examples() {
        let k3 = Graph::new(3, [(0, 1), (1, 2), (0, 2)], None).unwrap();
        let knn = jaccard_knn(&k3, 2).unwrap();
        assert_eq!(knn.lists(), &[vec![1, 2], vec![0, 2], vec![0, 1]]);
        let edgeless = Graph::empty(4);
        let knn = jaccard_knn(&edgeless, 3).unwrap();
        assert!(knn.lists().iter().all(|l| l.is_empty()));
    }

    #[test]
    fn jaccard_star_matches_brute_force() {
        // star with centre 0 and leaves 1..=4
        let g = Graph::new(5, (1..5).map(|l| (0, l)), None).unwrap();
        let closed = |i: usize| {
            let mut s: Vec<usize> = g.neighbors(i).to_vec();
            s.push(i);
            s
        };
        let knn = jaccard_knn(&g, 1).unwrap();
        for i in 0..5 {
            let ci = closed(i);
            let mut best: Option<(f64, usize)> = None;
            for j in 0..5 {
                if j == i {
                    continue;
                }
                let cj = closed(j);
                let inter = ci.iter().filter(|x| cj.contains(x)).count();
                let union = ci.len() + cj.len() - inter;
                let s = inter as f64 / union as f64;
                if s > 0.0 && best.is_none_or(|(bs, _)| s > bs) {
                    best = Some((s, j));
                }
            }
            assert_eq!(knn.neighbors(i), &[best.unwrap().1], "node {i}");
        }
        // leaf 1: centre has J = 2/5, other leaves J = 1/3, so centre wins
        assert_eq!(knn.neighbors(1), &[0]);
    }

    #[test]
    fn feature_examples() {
        let x = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 10.0]);
        let knn = feature_knn(&x, 1).unwrap();
        assert_eq!(knn.lists(), &[vec![1], vec![0], vec![1]]);
        let same = DMatrix::from_element(3, 2, 1.5);
        let knn = feature_knn(&same, 2).unwrap();
        assert_eq!(knn.lists(), &[vec![1, 2], vec![0, 2], vec![0, 1]]);
        assert!(feature_knn(&x, 3).is_err());
        let bad = DMatrix::from_row_slice(2, 1, &[0.0, f64::INFINITY]);
        assert!(feature_knn(&bad, 1).is_err());
    }

    #[test]
    fn oracle_latent_ties_by_id() {
        let u = [0.5, 0.4, 0.6, 0.5, 0.9];
        let knn = oracle_latent_knn(&u, 2).unwrap();
        // node 0: node 3 at distance 0, then nodes 1 and 2 tie at 0.1
        assert_eq!(knn.neighbors(0), &[3, 1]);
        assert_eq!(knn.neighbors(4), &[2, 0]);
    }
}
