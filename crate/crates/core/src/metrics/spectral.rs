use nalgebra::DMatrix;

use super::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::linalg::{singular_values_desc, svd_sorted};

pub const RANK_ME_EPS: f64 = 1e-12;

fn nonzero_spectrum(h: &EmbeddingMatrix) -> Result<Vec<f64>> {
    let s = singular_values_desc(h.matrix());
    if s[0] <= 0.0 {
        return Err(Error::invalid("metric undefined for the zero matrix"));
    }
    Ok(s)
}

/// `||H||_F^2 / ||H||_2^2`.
pub fn stable_rank(h: &EmbeddingMatrix) -> Result<f64> {
    let s = nonzero_spectrum(h)?;
    Ok(s.iter().map(|x| x * x).sum::<f64>() / (s[0] * s[0]))
}

/// Exponentiated entropy of the normalised singular values, each shifted
/// by `eps` and renormalised.
pub fn rank_me(h: &EmbeddingMatrix, eps: f64) -> Result<f64> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("eps must be finite and non-negative, got {eps}")));
    }
    let s = nonzero_spectrum(h)?;
    let l1: f64 = s.iter().sum();
    let p: Vec<f64> = s.iter().map(|x| x / l1 + eps).collect();
    let z: f64 = p.iter().sum();
    let entropy: f64 = p
        .iter()
        .map(|x| x / z)
        .filter(|&x| x > 0.0)
        .map(|x| -x * x.ln())
        .sum();
    Ok(entropy.exp())
}

/// `max_i ||U_i||^2 * n / p_eff` over the left singular vectors of the
/// numerically nonzero singular values.
pub fn coherence(h: &EmbeddingMatrix) -> Result<f64> {
    nonzero_spectrum(h)?;
    let svd = svd_sorted(h.matrix())?;
    let p_eff = svd.sigma.iter().filter(|&&x| x > 1e-12 * svd.sigma[0]).count();
    let u = svd.u.columns(0, p_eff);
    let max = u
        .row_iter()
        .map(|row| row.norm_squared())
        .fold(0.0f64, f64::max);
    Ok(max * h.n() as f64 / p_eff as f64)
}

/// `sigma_1 / sigma_min`; an error if `H` is numerically rank-deficient.
pub fn pseudo_condition(h: &EmbeddingMatrix) -> Result<f64> {
    let s = nonzero_spectrum(h)?;
    let min = s[s.len() - 1];
    let tol = f64::EPSILON * h.n().max(h.p()) as f64 * s[0];
    if min <= tol {
        return Err(Error::Numerical(
            "pseudo-condition number undefined: embedding is rank-deficient".into(),
        ));
    }
    Ok(s[0] / min)
}

/// Clustering of row directions relative to uniform rows on the sphere:
/// 1 when all rows are parallel, about 0 for random directions.
///
/// For `p = 1` every row is parallel to every other and the score is 1.
pub fn self_cluster(h: &EmbeddingMatrix) -> Result<f64> {
    let (n, p) = (h.n(), h.p());
    let mut t = h.matrix().clone();
    for (i, mut row) in t.row_iter_mut().enumerate() {
        let norm = row.norm();
        if norm == 0.0 {
            return Err(Error::invalid(format!("self-cluster undefined: row {i} is zero")));
        }
        row /= norm;
    }
    if p == 1 {
        return Ok(1.0);
    }
    // ||T T'||_F = ||T' T||_F and the latter is only p x p
    let gram: DMatrix<f64> = t.transpose() * &t;
    let fro2 = gram.norm_squared();
    let (nf, pf) = (n as f64, p as f64);
    let random = nf + nf * (nf - 1.0) / pf;
    Ok((fro2 - random) / (nf * nf - random))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(n: usize, p: usize, vals: &[f64]) -> EmbeddingMatrix {
        EmbeddingMatrix::new(DMatrix::from_row_slice(n, p, vals)).unwrap()
    }

    #[test]
    fn anchors() {
        let d = emb(3, 2, &[2.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!((stable_rank(&d).unwrap() - 1.25).abs() < 1e-12);
        assert!((pseudo_condition(&d).unwrap() - 2.0).abs() < 1e-12);
        let id = EmbeddingMatrix::new(DMatrix::identity(4, 4)).unwrap();
        assert!((coherence(&id).unwrap() - 1.0).abs() < 1e-12);
        assert!((pseudo_condition(&id).unwrap() - 1.0).abs() < 1e-12);
        assert!((rank_me(&id, 0.0).unwrap() - 4.0).abs() < 1e-12);

        let one_row = emb(4, 2, &[0.0, 0.0, 3.0, 4.0, 0.0, 0.0, 0.0, 0.0]);
        assert!((coherence(&one_row).unwrap() - 4.0).abs() < 1e-12);
        assert!((rank_me(&one_row, 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(pseudo_condition(&one_row).is_err());
        assert!(self_cluster(&one_row).is_err());

        let same = emb(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert!((self_cluster(&same).unwrap() - 1.0).abs() < 1e-12);
        let orth = emb(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert!((self_cluster(&orth).unwrap() + 1.0).abs() < 1e-12);
        let col = emb(3, 1, &[1.0, -2.0, 5.0]);
        assert_eq!(self_cluster(&col).unwrap(), 1.0);
    }

    #[test]
    fn zero_matrix_is_an_error() {
        let z = EmbeddingMatrix::new(DMatrix::zeros(3, 2)).unwrap();
        assert!(stable_rank(&z).is_err());
        assert!(rank_me(&z, RANK_ME_EPS).is_err());
        assert!(coherence(&z).is_err());
        assert!(pseudo_condition(&z).is_err());
    }
}
