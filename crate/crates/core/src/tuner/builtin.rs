//! Spectral stand-in embedder: a Laplacian-eigenmap target learned by a
//! ridge readout from neighbourhood-smoothed features. Training and
//! application are separate so models fitted on different replicas can
//! disagree on a shared test graph.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::Theta;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{subspace_eigen, sym_eigen_desc, DENSE_EIGEN_LIMIT};
use crate::metrics::EmbeddingMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuiltinParams {
    /// Output dimension.
    pub p: usize,
    /// Feature smoothing steps.
    pub s: usize,
    /// Ridge penalty on the non-intercept coefficients, relative to `1/n`.
    pub ridge: f64,
}

impl Default for BuiltinParams {
    fn default() -> Self {
        Self {
            p: 16,
            s: 2,
            ridge: 1e-3,
        }
    }
}

impl BuiltinParams {
    /// Read `p`, `s` and `ridge` from a grid entry; missing keys take the
    /// defaults and keys starting with `_` are ignored.
    pub fn from_theta(theta: &Theta) -> Result<Self> {
        let mut out = Self::default();
        for (key, v) in theta {
            let bad = || Error::invalid(format!("builtin embedder: bad value for \"{key}\": {v}"));
            match key.as_str() {
                "p" => out.p = v.as_u64().filter(|&p| p >= 1).ok_or_else(bad)? as usize,
                "s" => out.s = v.as_u64().ok_or_else(bad)? as usize,
                "ridge" => {
                    out.ridge = v
                        .as_f64()
                        .filter(|r| *r >= 0.0 && r.is_finite())
                        .ok_or_else(bad)?
                }
                k if k.starts_with('_') => {}
                _ => {
                    return Err(Error::invalid(format!(
                        "builtin embedder: unknown hyperparameter \"{key}\" (expected p, s, ridge)"
                    )))
                }
            }
        }
        Ok(out)
    }

    pub fn to_theta(&self) -> Theta {
        let mut t = Theta::new();
        t.insert("p".into(), Value::from(self.p));
        t.insert("s".into(), Value::from(self.s));
        t.insert("ridge".into(), Value::from(self.ridge));
        t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuiltinModel {
    /// `(d + 1) x p`, intercept row first.
    pub coef: DMatrix<f64>,
    pub s: usize,
}

/// `(D~^{-1} A~)^s X` with `A~ = A + I`.
pub fn smooth_features(g: &Graph, x: &DMatrix<f64>, s: usize) -> DMatrix<f64> {
    let mut cur = x.clone();
    for _ in 0..s {
        let mut next = cur.clone();
        for u in 0..g.n() {
            let w = 1.0 / (g.degree(u) + 1) as f64;
            for c in 0..cur.ncols() {
                let sum: f64 = cur[(u, c)] + g.neighbors(u).iter().map(|&v| cur[(v, c)]).sum::<f64>();
                next[(u, c)] = sum * w;
            }
        }
        cur = next;
    }
    cur
}

/// Eigenvectors 2..=p+1 of `D^{-1/2} A D^{-1/2}` by descending eigenvalue,
/// i.e. the bottom nontrivial eigenvectors of the normalised Laplacian.
/// Each column is signed so its largest-magnitude entry is positive.
pub fn laplacian_eigenmap(g: &Graph, p: usize, seed: u64) -> Result<DMatrix<f64>> {
    eigenmap(g, p, seed, g.n() <= DENSE_EIGEN_LIMIT)
}

fn eigenmap(g: &Graph, p: usize, seed: u64, dense: bool) -> Result<DMatrix<f64>> {
    let n = g.n();
    if p + 1 > n {
        return Err(Error::invalid(format!(
            "eigenmap dimension {p} needs at least {} nodes, graph has {n}",
            p + 1
        )));
    }
    let dinv: Vec<f64> = (0..n)
        .map(|u| match g.degree(u) {
            0 => 0.0,
            d => 1.0 / (d as f64).sqrt(),
        })
        .collect();
    let vecs = if dense {
        let mut m = DMatrix::zeros(n, n);
        for &(u, v) in g.edges() {
            let w = dinv[u] * dinv[v];
            m[(u, v)] = w;
            m[(v, u)] = w;
        }
        sym_eigen_desc(m).1.columns(1, p).into_owned()
    } else {
        // shift to (N + I) / 2 so the wanted end is also the largest in magnitude
        let apply = |x: &DMatrix<f64>| {
            let mut out = x * 0.5;
            for c in 0..x.ncols() {
                for u in 0..n {
                    let s: f64 = g.neighbors(u).iter().map(|&v| dinv[v] * x[(v, c)]).sum();
                    out[(u, c)] += 0.5 * dinv[u] * s;
                }
            }
            out
        };
        let (_, v) = subspace_eigen(n, p + 1, apply, |l| l, seed)?;
        v.columns(1, p).into_owned()
    };
    let mut y = vecs;
    for mut col in y.column_iter_mut() {
        let (mut best, mut idx) = (0.0, 0);
        for (i, &v) in col.iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                idx = i;
            }
        }
        if col[idx] < 0.0 {
            col.neg_mut();
        }
    }
    Ok(y)
}

fn design(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut z = DMatrix::from_element(x.nrows(), x.ncols() + 1, 1.0);
    z.columns_mut(1, x.ncols()).copy_from(x);
    z
}

pub fn builtin_train(g: &Graph, params: &BuiltinParams, seed: u64) -> Result<BuiltinModel> {
    let x = g
        .features()
        .ok_or_else(|| Error::invalid("builtin embedder needs node features"))?;
    let y = laplacian_eigenmap(g, params.p, seed)?;
    let z = design(&smooth_features(g, x, params.s));
    let n = g.n() as f64;
    let mut m = z.transpose() * &z / n;
    for i in 1..m.nrows() {
        m[(i, i)] += params.ridge;
    }
    let rhs = z.transpose() * y / n;
    let eig = SymmetricEigen::new(m);
    let max = eig.eigenvalues.max();
    if !(eig.eigenvalues.min() > 1e-12 * max) {
        return Err(Error::Numerical(
            "ridge system is singular; increase the ridge".into(),
        ));
    }
    let inv = eig.eigenvalues.map(|l| 1.0 / l);
    let coef = &eig.eigenvectors * DMatrix::from_diagonal(&inv) * (eig.eigenvectors.transpose() * rhs);
    Ok(BuiltinModel { coef, s: params.s })
}

pub fn builtin_apply(model: &BuiltinModel, g: &Graph) -> Result<EmbeddingMatrix> {
    let x = g
        .features()
        .ok_or_else(|| Error::invalid("builtin embedder needs node features"))?;
    if x.ncols() + 1 != model.coef.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "model expects {} features, graph has {}",
            model.coef.nrows() - 1,
            x.ncols()
        )));
    }
    EmbeddingMatrix::new(design(&smooth_features(g, x, model.s)) * &model.coef)
}
