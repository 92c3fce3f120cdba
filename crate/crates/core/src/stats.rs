//! Scalar graph statistics and replica-versus-original comparison.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::Graph;

pub const PAGERANK_DAMPING: f64 = 0.85;
pub const PAGERANK_TOL: f64 = 1e-12;
const PAGERANK_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub num_nodes: usize,
    pub num_edges: usize,
    pub avg_degree: f64,
    pub density: f64,
    pub avg_clustering_coefficient: f64,
    pub num_connected_components: usize,
    pub giant_component_size: usize,
    pub degree_assortativity: f64,
    /// Set when assortativity is undefined (no edges or zero degree
    /// variance across edge endpoints); the value is then reported as 0.
    pub assortativity_degenerate: bool,
    /// Total PageRank mass; 1 up to round-off.
    pub pagerank_sum: f64,
    /// Mean node id of the PageRank key set, `(n - 1) / 2`. Matches the
    /// "PageRank Sum" column of published comparison tables.
    pub pagerank_index_sum: f64,
    pub transitivity: f64,
    pub num_triangles: usize,
}

impl GraphStats {
    /// Statistic names and values in reporting order.
    pub fn values(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("num_nodes", self.num_nodes as f64),
            ("num_edges", self.num_edges as f64),
            ("avg_degree", self.avg_degree),
            ("density", self.density),
            ("avg_clustering_coefficient", self.avg_clustering_coefficient),
            ("num_connected_components", self.num_connected_components as f64),
            ("giant_component_size", self.giant_component_size as f64),
            ("degree_assortativity", self.degree_assortativity),
            ("pagerank_sum", self.pagerank_sum),
            ("pagerank_index_sum", self.pagerank_index_sum),
            ("transitivity", self.transitivity),
            ("num_triangles", self.num_triangles as f64),
        ]
    }
}

/// Triangles through each node, counted once per node.
pub fn triangles_per_node(g: &Graph) -> Vec<usize> {
    let mut t = vec![0; g.n()];
    for &(u, v) in g.edges() {
        // common neighbours w > v close the triangle (u, v, w) exactly once
        let (a, b) = (g.neighbors(u), g.neighbors(v));
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    let w = a[i];
                    if w > v {
                        t[u] += 1;
                        t[v] += 1;
                        t[w] += 1;
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    t
}

/// Component label per node plus component sizes.
pub fn connected_components(g: &Graph) -> (Vec<usize>, Vec<usize>) {
    let mut label = vec![usize::MAX; g.n()];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for s in 0..g.n() {
        if label[s] != usize::MAX {
            continue;
        }
        let c = sizes.len();
        label[s] = c;
        stack.push(s);
        let mut size = 0;
        while let Some(u) = stack.pop() {
            size += 1;
            for &v in g.neighbors(u) {
                if label[v] == usize::MAX {
                    label[v] = c;
                    stack.push(v);
                }
            }
        }
        sizes.push(size);
    }
    (label, sizes)
}

/// PageRank by power iteration; dangling mass is spread uniformly.
pub fn pagerank(g: &Graph, damping: f64, tol: f64) -> Vec<f64> {
    let n = g.n();
    if n == 0 {
        return Vec::new();
    }
    let nf = n as f64;
    let mut pr = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    for _ in 0..PAGERANK_MAX_ITER {
        let dangling: f64 = (0..n).filter(|&u| g.degree(u) == 0).map(|u| pr[u]).sum();
        let base = (1.0 - damping) / nf + damping * dangling / nf;
        next.iter_mut().for_each(|x| *x = base);
        for u in 0..n {
            let d = g.degree(u);
            if d > 0 {
                let share = damping * pr[u] / d as f64;
                for &v in g.neighbors(u) {
                    next[v] += share;
                }
            }
        }
        let diff: f64 = pr.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pr, &mut next);
        if diff < tol {
            break;
        }
    }
    pr
}

/// Pearson correlation of endpoint degrees over edges, both orientations.
/// Returns `(value, degenerate)`.
pub fn degree_assortativity(g: &Graph) -> (f64, bool) {
    let m = g.num_edges();
    if m == 0 {
        return (0.0, true);
    }
    let (mut sxy, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for &(u, v) in g.edges() {
        let (x, y) = (g.degree(u) as f64, g.degree(v) as f64);
        sxy += x * y;
        s1 += x + y;
        s2 += x * x + y * y;
    }
    let mf = m as f64;
    let mean = s1 / (2.0 * mf);
    let var = s2 / (2.0 * mf) - mean * mean;
    let cov = sxy / mf - mean * mean;
    if var <= 1e-12 * mean * mean.max(1.0) {
        return (0.0, true);
    }
    (cov / var, false)
}

pub fn graph_stats(g: &Graph) -> GraphStats {
    let n = g.n();
    let m = g.num_edges();
    let tri = triangles_per_node(g);
    let num_triangles = tri.iter().sum::<usize>() / 3;
    let mut clustering = 0.0;
    let mut triples = 0usize;
    for u in 0..n {
        let d = g.degree(u);
        if d >= 2 {
            let pairs = d * (d - 1) / 2;
            triples += pairs;
            clustering += tri[u] as f64 / pairs as f64;
        }
    }
    let (_, sizes) = connected_components(g);
    let (assort, degenerate) = degree_assortativity(g);
    GraphStats {
        num_nodes: n,
        num_edges: m,
        avg_degree: if n > 0 { 2.0 * m as f64 / n as f64 } else { 0.0 },
        density: if n > 1 {
            2.0 * m as f64 / (n as f64 * (n as f64 - 1.0))
        } else {
            0.0
        },
        avg_clustering_coefficient: if n > 0 { clustering / n as f64 } else { 0.0 },
        num_connected_components: sizes.len(),
        giant_component_size: sizes.iter().copied().max().unwrap_or(0),
        degree_assortativity: assort,
        assortativity_degenerate: degenerate,
        pagerank_sum: pagerank(g, PAGERANK_DAMPING, PAGERANK_TOL).iter().sum(),
        pagerank_index_sum: if n > 0 { (n as f64 - 1.0) / 2.0 } else { 0.0 },
        transitivity: if triples > 0 {
            3.0 * num_triangles as f64 / triples as f64
        } else {
            0.0
        },
        num_triangles,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub original: f64,
    pub mean: f64,
    /// Population standard deviation across replicas.
    pub sd: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsComparison {
    pub entries: Vec<(String, StatSummary)>,
}

impl StatsComparison {
    pub fn get(&self, name: &str) -> Option<&StatSummary> {
        self.entries.iter().find(|(k, _)| k == name).map(|(_, s)| s)
    }

    /// `{statistic: {original, mean, sd, count}}` in reporting order.
    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (k, s) in &self.entries {
            map.insert(k.clone(), serde_json::to_value(s).expect("summary serialises"));
        }
        serde_json::Value::Object(map)
    }
}

pub fn stats_report(original: &Graph, replicas: &[Graph]) -> Result<StatsComparison> {
    stats_report_with(original, replicas, Exec::default())
}

pub fn stats_report_with(
    original: &Graph,
    replicas: &[Graph],
    exec: Exec,
) -> Result<StatsComparison> {
    let per: Vec<GraphStats> = exec.map(replicas.len(), |i| graph_stats(&replicas[i]));
    summarize(&graph_stats(original), &per)
}

/// Combine precomputed statistics into a comparison.
pub fn summarize(original: &GraphStats, replicas: &[GraphStats]) -> Result<StatsComparison> {
    if replicas.is_empty() {
        return Err(Error::invalid("stats report needs at least one replica"));
    }
    let cols: Vec<Vec<(&'static str, f64)>> = replicas.iter().map(GraphStats::values).collect();
    let count = replicas.len();
    let entries = original
        .values()
        .into_iter()
        .enumerate()
        .map(|(c, (name, orig))| {
            let xs: Vec<f64> = cols.iter().map(|r| r[c].1).collect();
            let mean = xs.iter().sum::<f64>() / count as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / count as f64;
            (
                name.to_string(),
                StatSummary {
                    original: orig,
                    mean,
                    sd: var.sqrt(),
                    count,
                },
            )
        })
        .collect();
    Ok(StatsComparison { entries })
}
