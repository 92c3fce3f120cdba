//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use lobstur_core::{DMatrix, Graph};
use nalgebra::{Cholesky, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn erdos_renyi(n: usize, p: f64, r: &mut ChaCha8Rng) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, edges, None).unwrap()
}

pub fn gaussian(n: usize, p: usize, r: &mut ChaCha8Rng) -> DMatrix<f64> {
    use rand_distr::{Distribution, StandardNormal};
    DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(r))
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Graph statistics from the dense adjacency matrix.
#[derive(Debug)]
pub struct Brute {
    pub edges: usize,
    pub triangles: usize,
    pub transitivity: f64,
    pub clustering: f64,
    pub components: usize,
    pub giant: usize,
    pub assortativity: Option<f64>,
    pub avg_degree: f64,
    pub density: f64,
    pub pagerank: Vec<f64>,
}

pub fn brute(g: &Graph) -> Brute {
    let n = g.n();
    let a = g.dense_adjacency();
    let a3 = &a * &a * &a;
    let deg: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
    let edges = (a.sum() / 2.0).round() as usize;
    let triangles = (a3.trace() / 6.0).round() as usize;
    let triples: f64 = deg.iter().map(|d| d * (d - 1.0)).sum();
    let transitivity = if triples > 0.0 { a3.trace() / triples } else { 0.0 };
    let clustering = (0..n)
        .map(|i| {
            if deg[i] >= 2.0 {
                a3[(i, i)] / (deg[i] * (deg[i] - 1.0))
            } else {
                0.0
            }
        })
        .sum::<f64>()
        / n.max(1) as f64;

    // reachability closure by repeated squaring
    let mut reach = DMatrix::from_fn(n, n, |i, j| if i == j || a[(i, j)] > 0.0 { 1.0 } else { 0.0 });
    for _ in 0..6 {
        reach = (&reach * &reach).map(|x| if x > 0.0 { 1.0 } else { 0.0 });
    }
    let mut seen = vec![false; n];
    let mut sizes = Vec::new();
    for i in 0..n {
        if !seen[i] {
            let members: Vec<usize> = (0..n).filter(|&j| reach[(i, j)] > 0.0).collect();
            for &j in &members {
                seen[j] = true;
            }
            sizes.push(members.len());
        }
    }

    // Pearson correlation over the 2m ordered endpoint pairs
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if a[(i, j)] > 0.0 {
                xs.push(deg[i]);
                ys.push(deg[j]);
            }
        }
    }
    let assortativity = if xs.is_empty() {
        None
    } else {
        let m = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / m;
        let my = ys.iter().sum::<f64>() / m;
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / m;
        let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>() / m;
        let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum::<f64>() / m;
        if vx < 1e-12 {
            None
        } else {
            Some(cov / (vx * vy).sqrt())
        }
    };

    Brute {
        edges,
        triangles,
        transitivity,
        clustering,
        components: sizes.len(),
        giant: sizes.iter().copied().max().unwrap_or(0),
        assortativity,
        avg_degree: if n > 0 { 2.0 * edges as f64 / n as f64 } else { 0.0 },
        density: if n > 1 { 2.0 * edges as f64 / (n * (n - 1)) as f64 } else { 0.0 },
        pagerank: dense_pagerank(&a, 0.85),
    }
}

/// Solve `(I - d P^T) x = (1 - d)/n 1` with dangling rows spread uniformly.
pub fn dense_pagerank(a: &DMatrix<f64>, d: f64) -> Vec<f64> {
    let n = a.nrows();
    if n == 0 {
        return Vec::new();
    }
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        let deg = a.row(i).sum();
        for j in 0..n {
            p[(i, j)] = if deg > 0.0 { a[(i, j)] / deg } else { 1.0 / n as f64 };
        }
    }
    let m = DMatrix::identity(n, n) - p.transpose() * d;
    let rhs = nalgebra::DVector::from_element(n, (1.0 - d) / n as f64);
    m.lu().solve(&rhs).unwrap().iter().copied().collect()
}

fn centre(h: &DMatrix<f64>) -> DMatrix<f64> {
    let mut c = h.clone();
    for mut col in c.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
    }
    c
}

/// Canonical correlations from the generalized eigenproblem
/// `S_ab S_bb^{-1} S_ba u = rho^2 S_aa u`, reduced with a Cholesky factor.
pub fn cca_oracle(ha: &DMatrix<f64>, hb: &DMatrix<f64>) -> Vec<f64> {
    let n = ha.nrows() as f64;
    let (a, b) = (centre(ha), centre(hb));
    let saa = a.transpose() * &a / n;
    let sbb = b.transpose() * &b / n;
    let sab = a.transpose() * &b / n;
    let sbb_inv = Cholesky::new(sbb).unwrap().inverse();
    let l = Cholesky::new(saa).unwrap().l();
    let l_inv = l.try_inverse().unwrap();
    let m = &l_inv * &sab * sbb_inv * sab.transpose() * l_inv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let mut rho: Vec<f64> = SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .map(|x| x.max(0.0).sqrt().min(1.0))
        .collect();
    rho.sort_by(|x, y| y.total_cmp(x));
    rho.truncate(ha.ncols().min(hb.ncols()));
    rho
}

/// Eigenvalues of `H^T H`, descending (squared singular values).
fn gram_spectrum(h: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = SymmetricEigen::new(h.transpose() * h)
        .eigenvalues
        .iter()
        .map(|x| x.max(0.0))
        .collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

pub fn stable_rank_oracle(h: &DMatrix<f64>) -> f64 {
    let s2 = gram_spectrum(h);
    s2.iter().sum::<f64>() / s2[0]
}

pub fn rank_me_oracle(h: &DMatrix<f64>, eps: f64) -> f64 {
    let s: Vec<f64> = gram_spectrum(h).iter().map(|x| x.sqrt()).collect();
    let l1: f64 = s.iter().sum();
    let p: Vec<f64> = s.iter().map(|x| x / l1 + eps).collect();
    let z: f64 = p.iter().sum();
    (-p.iter().map(|x| x / z).filter(|&x| x > 0.0).map(|x| x * x.ln()).sum::<f64>()).exp()
}

/// Coherence from leverage scores `h_i^T (H^T H)^{-1} h_i`; needs full
/// column rank.
pub fn coherence_oracle(h: &DMatrix<f64>) -> f64 {
    let (n, p) = h.shape();
    let g_inv = Cholesky::new(h.transpose() * h).unwrap().inverse();
    let lev = (0..n)
        .map(|i| {
            let r = h.row(i);
            (r * &g_inv * r.transpose())[(0, 0)]
        })
        .fold(0.0f64, f64::max);
    lev * n as f64 / p as f64
}

pub fn kappa_oracle(h: &DMatrix<f64>) -> f64 {
    let s2 = gram_spectrum(h);
    (s2[0] / s2[s2.len() - 1]).sqrt()
}

/// Straight from the definition with the explicit `n x n` Gram matrix.
pub fn self_cluster_oracle(h: &DMatrix<f64>) -> f64 {
    let (n, p) = (h.nrows() as f64, h.ncols() as f64);
    let mut t = h.clone();
    for mut row in t.row_iter_mut() {
        let norm = row.norm();
        row /= norm;
    }
    let g = &t * t.transpose();
    let f2: f64 = g.iter().map(|x| x * x).sum();
    (f2 - n - n * (n - 1.0) / p) / (n * n - n - n * (n - 1.0) / p)
}
