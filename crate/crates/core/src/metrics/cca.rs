use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{centered, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::linalg::svd_sorted;

/// Diagonal loading added to each covariance before whitening.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ridge {
    Absolute(f64),
    /// Multiple of `trace(cov) / p`.
    RelativeToTrace(f64),
}

impl Default for Ridge {
    fn default() -> Self {
        Ridge::RelativeToTrace(1e-6)
    }
}

impl Ridge {
    pub const NONE: Ridge = Ridge::Absolute(0.0);

    fn resolve(self, cov: &DMatrix<f64>) -> Result<f64> {
        let v = match self {
            Ridge::Absolute(v) => v,
            Ridge::RelativeToTrace(v) => v * cov.trace() / cov.nrows() as f64,
        };
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("ridge must be finite and non-negative, got {v}")));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcaResult {
    /// Canonical correlations, descending, clipped to `[0, 1]`.
    pub correlations: Vec<f64>,
    pub alignment: f64,
    pub r: usize,
    pub ridge: Ridge,
}

/// `(cov + ridge I)^{-1/2}` for one side.
fn whitener(hc: &DMatrix<f64>, ridge: Ridge, side: &str) -> Result<DMatrix<f64>> {
    let n = hc.nrows() as f64;
    let mut cov = hc.transpose() * hc / n;
    let lambda = ridge.resolve(&cov)?;
    for i in 0..cov.nrows() {
        cov[(i, i)] += lambda;
    }
    let eig = SymmetricEigen::new(cov);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if max <= 0.0 {
        return Err(Error::Numerical(format!("embedding {side} has zero covariance")));
    }
    let floor = lambda.max(1e-12 * max);
    if lambda == 0.0 && min <= 1e-12 * max {
        return Err(Error::Numerical(format!(
            "covariance of embedding {side} is rank-deficient; use a positive ridge"
        )));
    }
    let d = eig.eigenvalues.map(|l| 1.0 / l.max(floor).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose())
}

/// Canonical correlations between two embeddings of the same nodes and the
/// Frobenius distance between their canonical projections.
///
/// Both inputs are column-centred and covariances use `1/n`, so with zero
/// ridge `alignment^2 = 2 n sum(1 - rho_k)`. `r` defaults to
/// `min(p_a, p_b)`.
pub fn cca_alignment(
    ha: &EmbeddingMatrix,
    hb: &EmbeddingMatrix,
    r: Option<usize>,
    ridge: Ridge,
) -> Result<CcaResult> {
    if ha.n() != hb.n() {
        return Err(Error::DimensionMismatch(format!(
            "embeddings have {} and {} rows",
            ha.n(),
            hb.n()
        )));
    }
    let max_r = ha.p().min(hb.p());
    let r = r.unwrap_or(max_r);
    if r == 0 || r > max_r {
        return Err(Error::invalid(format!("r = {r} not in [1, {max_r}]")));
    }
    let n = ha.n() as f64;
    let a = centered(ha.matrix());
    let b = centered(hb.matrix());
    let wa = whitener(&a, ridge, "a")?;
    let wb = whitener(&b, ridge, "b")?;
    let cross = a.transpose() * &b / n;
    let t = &wa * cross * &wb;
    let svd = svd_sorted(&t)?;
    let correlations: Vec<f64> = svd.sigma[..r].iter().map(|s| s.clamp(0.0, 1.0)).collect();
    let u_hat = wa * svd.u.columns(0, r);
    let v_hat = wb * svd.v_t.rows(0, r).transpose();
    let alignment = (a * u_hat - b * v_hat).norm();
    Ok(CcaResult {
        correlations,
        alignment,
        r,
        ridge,
    })
}
