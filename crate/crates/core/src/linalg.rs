//! Dense and iterative symmetric eigen-solvers, SVD helpers and PSD matrix
//! functions shared by the bootstrap, metric and tuner modules.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng;

/// Graphs above this size use subspace iteration instead of a dense solve.
pub const DENSE_EIGEN_LIMIT: usize = 2000;

/// Eigenpairs of a symmetric matrix, eigenvalues descending.
pub fn sym_eigen_desc(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = eig.eigenvectors.select_columns(order.iter());
    (values, vectors)
}

/// `M^{-1/2}` for a symmetric PSD matrix, flooring eigenvalues at `floor`.
pub fn inv_sqrt_psd(m: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let d = eig.eigenvalues.map(|l| 1.0 / l.max(floor).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// Thin SVD with singular values sorted descending.
pub struct SortedSvd {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v_t: DMatrix<f64>,
}

pub fn svd_sorted(h: &DMatrix<f64>) -> Result<SortedSvd> {
    let svd = h.clone().svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Numerical("SVD did not converge".into())),
    };
    let r = svd.singular_values.len();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    Ok(SortedSvd {
        u: u.select_columns(order.iter()),
        sigma: order.iter().map(|&i| svd.singular_values[i]).collect(),
        v_t: v_t.select_rows(order.iter()),
    })
}

pub fn singular_values_desc(h: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = h.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Sparse product `A * X` for the adjacency matrix of `g`.
pub fn adjacency_times(g: &Graph, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(g.n(), x.ncols());
    for c in 0..x.ncols() {
        let col = x.column(c);
        for u in 0..g.n() {
            out[(u, c)] = g.neighbors(u).iter().map(|&v| col[v]).sum();
        }
    }
    out
}

/// Top `d` eigenpairs of a symmetric operator, ordered by descending
/// `key(eigenvalue)`. Uses block subspace iteration with Rayleigh-Ritz
/// extraction; `apply` must compute `A * X`.
pub fn subspace_eigen<F, K>(
    n: usize,
    d: usize,
    apply: F,
    key: K,
    seed: u64,
) -> Result<(Vec<f64>, DMatrix<f64>)>
where
    F: Fn(&DMatrix<f64>) -> DMatrix<f64>,
    K: Fn(f64) -> f64,
{
    if d == 0 || d > n {
        return Err(Error::invalid(format!("cannot extract {d} eigenpairs of a {n}x{n} operator")));
    }
    let block = (d + 10).max(2 * d).min(n);
    let mut r = rng::stream(seed, 0x4549_474E);
    let mut q = DMatrix::from_fn(n, block, |_, _| r.random::<f64>() - 0.5);
    q = q.qr().q();
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..5000 {
        let z = apply(&q);
        let t = q.transpose() * &z;
        let t = (&t + t.transpose()) * 0.5;
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|&a, &b| key(eig.eigenvalues[b]).total_cmp(&key(eig.eigenvalues[a])));
        let vals: Vec<f64> = order.iter().take(d).map(|&i| eig.eigenvalues[i]).collect();
        let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let ritz = &q * eig.eigenvectors.select_columns(order.iter().take(d));
        let az = &z * eig.eigenvectors.select_columns(order.iter().take(d));
        let mut worst = 0.0f64;
        for (c, &lambda) in vals.iter().enumerate() {
            let res = (az.column(c) - ritz.column(c) * lambda).norm();
            worst = worst.max(res);
        }
        // stop at tolerance, or once the residual has plateaued at round-off
        if worst < 0.5 * best {
            best = worst;
            stalled = 0;
        } else {
            stalled += 1;
        }
        if worst <= 1e-10 * scale || (stalled >= 50 && best <= 1e-8 * scale) {
            return Ok((vals, ritz));
        }
        let zq = z.qr().q();
        if zq.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("subspace iteration produced non-finite values".into()));
        }
        q = zq;
    }
    Err(Error::Numerical("subspace iteration did not converge".into()))
}

/// Top `d` adjacency eigenpairs by eigenvalue magnitude.
pub fn adjacency_top_eigen(g: &Graph, d: usize, seed: u64) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = g.n();
    if d == 0 || d > n {
        return Err(Error::invalid(format!("embedding dimension {d} not in [1, {n}]")));
    }
    if g.num_edges() == 0 {
        return Ok((vec![0.0; d], DMatrix::zeros(n, d)));
    }
    if n <= DENSE_EIGEN_LIMIT {
        let (vals, vecs) = sym_eigen_desc(g.dense_adjacency());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| vals[b].abs().total_cmp(&vals[a].abs()).then(a.cmp(&b)));
        order.truncate(d);
        Ok((
            order.iter().map(|&i| vals[i]).collect(),
            vecs.select_columns(order.iter()),
        ))
    } else {
        subspace_eigen(n, d, |x| adjacency_times(g, x), f64::abs, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_square_root() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let s = inv_sqrt_psd(&m, 0.0);
        let id = &s * &m * &s;
        assert!((id - DMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn subspace_matches_dense() {
        // ring plus chords, n = 60
        let n = 60;
        let edges = (0..n).map(|i| (i, (i + 1) % n)).chain((0..n).step_by(3).map(|i| (i, (i + 7) % n)));
        let g = Graph::new(n, edges, None).unwrap();
        let (dense_vals, _) = sym_eigen_desc(g.dense_adjacency());
        let mut by_mag = dense_vals.clone();
        by_mag.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
        let (vals, vecs) = subspace_eigen(n, 3, |x| adjacency_times(&g, x), f64::abs, 1).unwrap();
        for (a, b) in vals.iter().zip(&by_mag) {
            assert!((a.abs() - b.abs()).abs() < 1e-8, "{a} vs {b}");
        }
        let a = g.dense_adjacency();
        for c in 0..3 {
            let r = (&a * vecs.column(c) - vecs.column(c) * vals[c]).norm();
            assert!(r < 1e-7);
        }
    }

    #[test]
    fn svd_is_sorted() {
        let h = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 3.0, 0.0, 0.0]);
        let s = svd_sorted(&h).unwrap();
        assert_eq!(s.sigma, vec![3.0, 1.0]);
        let back = &s.u * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(s.sigma.clone())) * &s.v_t;
        assert!((back - h).amax() < 1e-12);
    }
}
