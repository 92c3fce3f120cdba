//! Stem-matching edge rewiring.
//!
//! Both the kNN-based rewiring and its two-hop approximation share one
//! loop: pop a stem `u` uniformly from the stem multiset `L`, weight every
//! node `v` still in `L` by how often it is reached from `u`'s source set,
//! draw `v` proportionally, consume one of its stems and connect `u`-`v`.
//! `u` itself and nodes already joined to `u` are not candidates, so the
//! output is always simple; a stem with no candidate is dropped.
//!
//! The loop works on replica nodes that each point at an origin node of the
//! input graph, which covers the conditional case (identity map) and the
//! marginal case (origins drawn with replacement) with the same code.

use rand::Rng;

use super::pool::StemPool;
use crate::graph::{Graph, KnnGraph};
use crate::rng;

/// Where a popped stem looks for partners.
pub(crate) enum CandidateSource<'a> {
    /// Union of the adjacency lists of the origin's kNN, with multiplicity.
    Knn(&'a KnnGraph),
    /// Two-hop walks from the origin, i.e. row `u` of `A^2` with the
    /// diagonal removed.
    TwoHop,
}

/// Statistics of a single rewiring pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RewireTrace {
    pub stems: usize,
    pub edges: usize,
    pub no_candidate: usize,
}

pub(crate) fn rewire(
    g: &Graph,
    source: CandidateSource<'_>,
    origin: &[usize],
    seed: u64,
) -> (Vec<(usize, usize)>, RewireTrace) {
    let mut replicas_of = vec![Vec::new(); g.n()];
    for (r, &o) in origin.iter().enumerate() {
        replicas_of[o].push(r);
    }
    let mut pool = StemPool::new(origin.iter().map(|&o| g.degree(o)).collect());
    let mut trace = RewireTrace {
        stems: pool.total(),
        ..Default::default()
    };
    let mut rng = rng::stream(seed, rng::REWIRE);
    let mut partners: Vec<Vec<usize>> = vec![Vec::new(); origin.len()];

    let mut weight = vec![0u32; g.n()];
    let mut touched: Vec<usize> = Vec::new();
    let mut cands: Vec<(usize, u32)> = Vec::new();

    while let Some(u) = pool.pop(&mut rng) {
        let ou = origin[u];
        let (sources, exclude_origin): (&[usize], bool) = match &source {
            CandidateSource::Knn(knn) => (knn.neighbors(ou), false),
            CandidateSource::TwoHop => (g.neighbors(ou), true),
        };
        for &m in sources {
            for &w in g.neighbors(m) {
                if exclude_origin && w == ou {
                    continue;
                }
                if weight[w] == 0 {
                    touched.push(w);
                }
                weight[w] += 1;
            }
        }
        cands.clear();
        let mut total: u64 = 0;
        for &w in &touched {
            for &v in &replicas_of[w] {
                if v != u && pool.count(v) > 0 && !partners[u].contains(&v) {
                    cands.push((v, weight[w]));
                    total += weight[w] as u64;
                }
            }
            weight[w] = 0;
        }
        touched.clear();
        if total == 0 {
            trace.no_candidate += 1;
            continue;
        }
        let mut r = rng.random_range(0..total);
        let mut v = cands[cands.len() - 1].0;
        for &(c, w) in &cands {
            if r < w as u64 {
                v = c;
                break;
            }
            r -= w as u64;
        }
        pool.remove(v);
        partners[u].push(v);
        partners[v].push(u);
        trace.edges += 1;
    }
    let mut out: Vec<(usize, usize)> = partners
        .iter()
        .enumerate()
        .flat_map(|(u, ps)| ps.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
        .collect();
    out.sort_unstable();
    (out, trace)
}
