use std::collections::{BTreeMap, HashSet};

use super::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::knn::RowMajor;

/// Mean overlap of each node's `m` nearest Euclidean neighbours in the two
/// embeddings, as a fraction of `m`. Ties go to the lower node id.
pub fn neighbor_kept_ratio(ha: &EmbeddingMatrix, hb: &EmbeddingMatrix, m: usize) -> Result<f64> {
    let n = ha.n();
    if hb.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "embeddings have {} and {} rows",
            n,
            hb.n()
        )));
    }
    if m == 0 || m > n - 1 {
        return Err(Error::invalid(format!("neighbourhood size {m} not in [1, {}]", n - 1)));
    }
    let (ra, rb) = (RowMajor::new(ha.matrix()), RowMajor::new(hb.matrix()));
    let kept = Exec::default().map(n, |i| {
        let a: HashSet<usize> = ra.nearest(i, m).into_iter().collect();
        rb.nearest(i, m).iter().filter(|j| a.contains(j)).count()
    });
    Ok(kept.iter().sum::<usize>() as f64 / (n * m) as f64)
}

struct Contingency {
    n: usize,
    cells: BTreeMap<(usize, usize), usize>,
    rows: BTreeMap<usize, usize>,
    cols: BTreeMap<usize, usize>,
}

fn contingency(a: &[usize], b: &[usize]) -> Result<Contingency> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "label vectors have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::invalid("need at least two labels"));
    }
    let mut t = Contingency {
        n: a.len(),
        cells: BTreeMap::new(),
        rows: BTreeMap::new(),
        cols: BTreeMap::new(),
    };
    for (&x, &y) in a.iter().zip(b) {
        *t.cells.entry((x, y)).or_default() += 1;
        *t.rows.entry(x).or_default() += 1;
        *t.cols.entry(y).or_default() += 1;
    }
    Ok(t)
}

fn pairs(c: usize) -> f64 {
    (c * c.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index. Two labelings that are both trivial (one cluster,
/// or all singletons) score 1.
pub fn ari(a: &[usize], b: &[usize]) -> Result<f64> {
    let t = contingency(a, b)?;
    let index: f64 = t.cells.values().map(|&c| pairs(c)).sum();
    let sa: f64 = t.rows.values().map(|&c| pairs(c)).sum();
    let sb: f64 = t.cols.values().map(|&c| pairs(c)).sum();
    let expected = sa * sb / pairs(t.n);
    let max = (sa + sb) / 2.0;
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

fn entropy(counts: &BTreeMap<usize, usize>, n: f64) -> f64 {
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalised mutual information, arithmetic-mean normalisation. 1 when
/// both labelings have a single cluster.
pub fn nmi(a: &[usize], b: &[usize]) -> Result<f64> {
    let t = contingency(a, b)?;
    let n = t.n as f64;
    let (ha, hb) = (entropy(&t.rows, n), entropy(&t.cols, n));
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    let mi: f64 = t
        .cells
        .iter()
        .map(|(&(x, y), &c)| {
            let pxy = c as f64 / n;
            let px = t.rows[&x] as f64 / n;
            let py = t.cols[&y] as f64 / n;
            pxy * (pxy / (px * py)).ln()
        })
        .sum();
    Ok((mi / ((ha + hb) / 2.0)).clamp(0.0, 1.0))
}
