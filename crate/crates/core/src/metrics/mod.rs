//! Embedding metrics: CCA alignment between two embeddings, spectral
//! collapse diagnostics, and agreement scores for neighbour sets and
//! clusterings.

mod agreement;
mod cca;
mod kmeans;
mod spectral;

pub use agreement::{ari, neighbor_kept_ratio, nmi};
pub use cca::{cca_alignment, CcaResult, Ridge};
pub use kmeans::{kmeans, kmeans_with, KMeansConfig, MAX_RESTARTS};
pub use spectral::{
    coherence, pseudo_condition, rank_me, self_cluster, stable_rank, RANK_ME_EPS,
};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// An `n x p` node embedding with finite entries, `n >= 2` and `p >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix(DMatrix<f64>);

impl EmbeddingMatrix {
    pub fn new(h: DMatrix<f64>) -> Result<Self> {
        if h.nrows() < 2 || h.ncols() < 1 {
            return Err(Error::invalid(format!(
                "embedding must be at least 2x1, got {}x{}",
                h.nrows(),
                h.ncols()
            )));
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("embedding has non-finite entries"));
        }
        Ok(Self(h))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn p(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

impl TryFrom<DMatrix<f64>> for EmbeddingMatrix {
    type Error = Error;

    fn try_from(h: DMatrix<f64>) -> Result<Self> {
        Self::new(h)
    }
}

impl AsRef<DMatrix<f64>> for EmbeddingMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Column-centred copy.
pub(crate) fn centered(h: &DMatrix<f64>) -> DMatrix<f64> {
    let mut c = h.clone();
    let n = h.nrows() as f64;
    for mut col in c.column_iter_mut() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
    }
    c
}
