//! Node-drop and edge-drop resamplers, kept as comparators for the local
//! bootstrap.

use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng;

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::invalid(format!("drop rate {rate} not in [0, 1]")));
    }
    Ok(())
}

/// Keep a uniform subset of `round(n * (1 - rate))` nodes and the induced
/// subgraph, relabelled in ascending order of original id.
pub fn node_drop(g: &Graph, rate: f64, seed: u64) -> Result<Graph> {
    check_rate(rate)?;
    let n = g.n();
    let keep = ((n as f64) * (1.0 - rate)).round() as usize;
    let mut rng = rng::stream(seed, 0x4E44);
    let mut kept = sample(&mut rng, n, keep).into_vec();
    kept.sort_unstable();
    let mut new_id = vec![usize::MAX; n];
    for (i, &v) in kept.iter().enumerate() {
        new_id[v] = i;
    }
    let edges = g
        .edges()
        .iter()
        .filter(|&&(u, v)| new_id[u] != usize::MAX && new_id[v] != usize::MAX)
        .map(|&(u, v)| (new_id[u], new_id[v]));
    let features = g.features().map(|x| x.select_rows(kept.iter()));
    Graph::new(keep, edges, features)
}

/// Remove a uniform subset of `round(|E| * rate)` edges.
pub fn edge_drop(g: &Graph, rate: f64, seed: u64) -> Result<Graph> {
    check_rate(rate)?;
    let m = g.num_edges();
    let keep = m - ((m as f64) * rate).round() as usize;
    let mut rng = rng::stream(seed, 0x4544);
    let mut kept = sample(&mut rng, m, keep).into_vec();
    kept.sort_unstable();
    let edges = kept.into_iter().map(|i| g.edges()[i]).collect();
    Ok(Graph::from_canonical(g.n(), edges, g.features().cloned()))
}
