use rand::Rng;

use super::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::knn::RowMajor;
use crate::rng;

pub const MAX_RESTARTS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    /// Independent k-means++ initialisations; the lowest inertia wins.
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop once no centre moves by more than this (Euclidean).
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

pub fn kmeans(h: &EmbeddingMatrix, k: usize, seed: u64) -> Result<Vec<usize>> {
    kmeans_with(h, k, seed, &KMeansConfig::default())
}

/// Lloyd's algorithm with k-means++ seeding. Labels are renumbered in order
/// of first appearance.
pub fn kmeans_with(h: &EmbeddingMatrix, k: usize, seed: u64, cfg: &KMeansConfig) -> Result<Vec<usize>> {
    let n = h.n();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k = {k} not in [1, {n}]")));
    }
    if cfg.restarts == 0 || cfg.restarts > MAX_RESTARTS {
        return Err(Error::invalid(format!(
            "restarts = {} not in [1, {MAX_RESTARTS}]",
            cfg.restarts
        )));
    }
    let x = RowMajor::new(h.matrix());
    let p = h.p();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for run in 0..cfg.restarts {
        let mut r = rng::stream(rng::mix(seed, run as u64), rng::SHUFFLE);
        let mut centres = seed_centres(&x, n, p, k, &mut r);
        let mut labels = vec![0; n];
        let mut inertia = 0.0;
        for _ in 0..cfg.max_iter {
            inertia = assign(&x, &centres, p, &mut labels);
            let moved = update(&x, &labels, &mut centres, p);
            if moved <= cfg.tol {
                inertia = assign(&x, &centres, p, &mut labels);
                break;
            }
        }
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, labels));
        }
    }
    let labels = best.expect("at least one restart").1;
    let mut map = vec![usize::MAX; k];
    let mut next = 0;
    Ok(labels
        .into_iter()
        .map(|l| {
            if map[l] == usize::MAX {
                map[l] = next;
                next += 1;
            }
            map[l]
        })
        .collect())
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn seed_centres(x: &RowMajor, n: usize, p: usize, k: usize, r: &mut impl Rng) -> Vec<f64> {
    let mut chosen = vec![false; n];
    let first = r.random_range(0..n);
    chosen[first] = true;
    let mut centres: Vec<f64> = x.row(first).to_vec();
    let mut d: Vec<f64> = (0..n).map(|i| x.sq_dist(i, first)).collect();
    for _ in 1..k {
        let total: f64 = d.iter().sum();
        let pick = if total > 0.0 {
            let mut t = r.random::<f64>() * total;
            let mut pick = None;
            for (i, &di) in d.iter().enumerate() {
                if di > 0.0 {
                    pick = Some(i);
                    if t < di {
                        break;
                    }
                    t -= di;
                }
            }
            pick.expect("positive mass")
        } else {
            // every point coincides with a centre; take an unused index
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[r.random_range(0..free.len())]
        };
        chosen[pick] = true;
        centres.extend_from_slice(x.row(pick));
        for (i, di) in d.iter_mut().enumerate() {
            *di = di.min(x.sq_dist(i, pick));
        }
    }
    debug_assert_eq!(centres.len(), k * p);
    centres
}

fn assign(x: &RowMajor, centres: &[f64], p: usize, labels: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (i, l) in labels.iter_mut().enumerate() {
        let (c, d) = centres
            .chunks(p)
            .enumerate()
            .map(|(c, m)| (c, sq(x.row(i), m)))
            .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
        *l = c;
        inertia += d;
    }
    inertia
}

/// Recompute means; empty clusters keep their centre. Returns the largest
/// centre displacement.
fn update(x: &RowMajor, labels: &[usize], centres: &mut [f64], p: usize) -> f64 {
    let k = centres.len() / p;
    let mut sums = vec![0.0; k * p];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, v) in sums[l * p..(l + 1) * p].iter_mut().zip(x.row(i)) {
            *s += v;
        }
    }
    let mut moved = 0.0f64;
    for c in 0..k {
        if counts[c] == 0 {
            continue;
        }
        let mean: Vec<f64> = sums[c * p..(c + 1) * p].iter().map(|s| s / counts[c] as f64).collect();
        moved = moved.max(sq(&mean, &centres[c * p..(c + 1) * p]).sqrt());
        centres[c * p..(c + 1) * p].copy_from_slice(&mean);
    }
    moved
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;

    use super::*;

    #[test]
    fn degenerate_k() {
        let h = EmbeddingMatrix::new(DMatrix::from_fn(6, 2, |i, j| (i * 3 + j) as f64)).unwrap();
        assert_eq!(kmeans(&h, 1, 0).unwrap(), vec![0; 6]);
        assert_eq!(kmeans(&h, 6, 0).unwrap(), (0..6).collect::<Vec<_>>());
        assert!(kmeans(&h, 7, 0).is_err());
        let bad = KMeansConfig {
            restarts: 51,
            ..Default::default()
        };
        assert!(kmeans_with(&h, 2, 0, &bad).is_err());
        assert_eq!(kmeans(&h, 3, 9).unwrap(), kmeans(&h, 3, 9).unwrap());
    }
}
