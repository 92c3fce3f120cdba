//! End-to-end acceptance checks. Each test prints one PASS/FAIL line to the
//! real stdout (bypassing capture) before asserting.

mod common;

use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use common::*;
use lobstur_core::bootstrap::{make_replicas, BootstrapConfig};
use lobstur_core::graphon::{estimator_mae, sample_graphon, scenario, Scenario};
use lobstur_core::metrics::*;
use lobstur_core::stats::{graph_stats, pagerank};
use lobstur_core::tuner::{tune, EmbedderSpec, HyperGrid, TuneConfig};
use lobstur_core::{io, DMatrix, Graph};
use rand::Rng;
use serde_json::json;

fn report(id: u32, name: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("acceptance criterion {id} [{verdict}] {name}: {detail}\n");
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(pass, "criterion {id} failed: {detail}");
}

fn scenario2() -> Graph {
    sample_graphon(&scenario(Scenario::Two), 500, 7).unwrap().graph
}

fn mean_edges(reps: &[Graph]) -> f64 {
    reps.iter().map(|r| r.num_edges() as f64).sum::<f64>() / reps.len() as f64
}

#[test]
fn criterion_1_graphon_bootstrap_fidelity() {
    let t = Instant::now();
    let g = scenario2();
    let reps = make_replicas(&g, 200, &BootstrapConfig::solution_2(20, 1)).unwrap();
    let ratio = mean_edges(&reps) / g.num_edges() as f64;
    let deg = |h: &Graph| 2.0 * h.num_edges() as f64 / h.n() as f64;
    let mean_deg = reps.iter().map(deg).sum::<f64>() / reps.len() as f64;
    let deg_err = (mean_deg - deg(&g)).abs() / deg(&g);
    let elapsed = t.elapsed();
    report(
        1,
        "graphon bootstrap fidelity",
        (0.96..=1.0).contains(&ratio) && deg_err <= 0.03 && elapsed < Duration::from_secs(120),
        format!(
            "|E|={} mean|E'|={:.2} ratio={ratio:.4} (band [0.96, 1.00]); avg degree {:.3} vs {:.3} ({:.2}% off, limit 3%); {elapsed:.2?}",
            g.num_edges(),
            mean_edges(&reps),
            mean_deg,
            deg(&g),
            100.0 * deg_err
        ),
    );
}

#[test]
fn criterion_2_robustness_to_k() {
    let g = scenario2();
    let m: Vec<f64> = [5, 20, 50]
        .iter()
        .map(|&k| mean_edges(&make_replicas(&g, 200, &BootstrapConfig::solution_2(k, 2)).unwrap()))
        .collect();
    let ratio20 = m[1] / g.num_edges() as f64;
    report(
        2,
        "robustness to k",
        m[0] <= m[1] && m[2] >= 0.99 * m[1] && (0.97..=1.0).contains(&ratio20),
        format!(
            "mean|E'| k=5 {:.2}, k=20 {:.2}, k=50 {:.2}; k=20 ratio {ratio20:.4} (band [0.97, 1.00]); 5->20 non-decreasing, 20->50 within 1%",
            m[0], m[1], m[2]
        ),
    );
}

#[test]
fn criterion_3_estimator_consistency() {
    let t = Instant::now();
    let model = scenario(Scenario::Two);
    let sizes = [200usize, 500, 1000, 2000];
    let mae: Vec<f64> = sizes
        .iter()
        .map(|&n| (0..20).map(|s| estimator_mae(&model, n, 1000, s).unwrap()).sum::<f64>() / 20.0)
        .collect();
    let monotone = mae.windows(2).all(|w| w[1] <= w[0]);
    let elapsed = t.elapsed();
    report(
        3,
        "estimator consistency",
        monotone && mae[3] < mae[0] && elapsed < Duration::from_secs(300),
        format!(
            "MAE n=200 {:.5}, n=500 {:.5}, n=1000 {:.5}, n=2000 {:.5} (non-increasing required); {elapsed:.2?}",
            mae[0], mae[1], mae[2], mae[3]
        ),
    );
}

#[test]
fn criterion_4_cca_correctness() {
    let mut r = rng(404);
    let emb = |m: DMatrix<f64>| EmbeddingMatrix::new(m).unwrap();
    let mut worst_self = 0.0f64;
    for _ in 0..100 {
        let (n, p) = (r.random_range(20..300), r.random_range(1..12));
        let h = gaussian(n, p, &mut r);
        let res = cca_alignment(&emb(h.clone()), &emb(h.clone()), None, Ridge::NONE).unwrap();
        worst_self = worst_self.max(res.alignment / h.norm());
    }
    let mut worst_affine = 0.0f64;
    for _ in 0..100 {
        let (n, p, q) = (r.random_range(20..300), r.random_range(1..8), r.random_range(1..8));
        let a = gaussian(n, p, &mut r);
        let b = gaussian(n, q, &mut r) + &a.columns(0, 1) * DMatrix::from_element(1, q, 0.5);
        let m = gaussian(q, q, &mut r) + DMatrix::identity(q, q) * 2.0;
        let c = gaussian(1, q, &mut r);
        let b2 = &b * m + DMatrix::from_fn(n, q, |_, j| c[(0, j)]);
        let x = cca_alignment(&emb(a.clone()), &emb(b), None, Ridge::NONE).unwrap();
        let y = cca_alignment(&emb(a), &emb(b2), None, Ridge::NONE).unwrap();
        let rel = (x.alignment - y.alignment).abs() / x.alignment.max(1e-300);
        let corr = x.correlations.iter().zip(&y.correlations).map(|(s, t)| (s - t).abs()).fold(0.0, f64::max);
        worst_affine = worst_affine.max(rel).max(corr);
    }
    let mut worst_identity = 0.0f64;
    for _ in 0..50 {
        let a = gaussian(200, 4, &mut r);
        let b = &a * gaussian(4, 4, &mut r) * 0.5 + gaussian(200, 4, &mut r);
        let res = cca_alignment(&emb(a.clone()), &emb(b.clone()), None, Ridge::NONE).unwrap();
        let rho = cca_oracle(&a, &b);
        let expect = 400.0 * rho.iter().map(|x| 1.0 - x).sum::<f64>();
        worst_identity = worst_identity.max((res.alignment.powi(2) - expect).abs() / expect);
    }
    report(
        4,
        "CCA metric correctness",
        worst_self < 1e-8 && worst_affine < 1e-6 && worst_identity < 1e-8,
        format!(
            "(a) max alignment(H,H)/||H||_F {worst_self:.2e} (< 1e-8); (b) max affine change {worst_affine:.2e} (< 1e-6); (c) max identity error vs oracle {worst_identity:.2e} (< 1e-8)"
        ),
    );
}

#[test]
fn criterion_5_spectral_metric_suite() {
    let mut r = rng(505);
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());
    let mut worst = 0.0f64;
    for t in 0..100 {
        let p = r.random_range(1..=64);
        let n = if t % 10 == 0 { 500 } else { r.random_range(p.max(2)..=500) };
        let h = gaussian(n, p, &mut r);
        let e = EmbeddingMatrix::new(h.clone()).unwrap();
        let mut errs = vec![
            rel(stable_rank(&e).unwrap(), stable_rank_oracle(&h)),
            rel(rank_me(&e, RANK_ME_EPS).unwrap(), rank_me_oracle(&h, RANK_ME_EPS)),
            rel(coherence(&e).unwrap(), coherence_oracle(&h)),
            rel(pseudo_condition(&e).unwrap(), kappa_oracle(&h)),
        ];
        if p > 1 {
            // SelfCluster sits near 0 for random rows, so its error is taken
            // against its natural unit scale
            let (a, b) = (self_cluster(&e).unwrap(), self_cluster_oracle(&h));
            errs.push((a - b).abs() / a.abs().max(b.abs()).max(1.0));
        }
        worst = errs.into_iter().fold(worst, f64::max);
    }
    let rank1 = EmbeddingMatrix::new(gaussian(50, 1, &mut r) * gaussian(1, 8, &mut r)).unwrap();
    let id = EmbeddingMatrix::new(DMatrix::identity(8, 8)).unwrap();
    let same = EmbeddingMatrix::new(DMatrix::from_fn(40, 5, |_, j| 1.0 + j as f64)).unwrap();
    let anchors = [
        (stable_rank(&rank1).unwrap(), 1.0),
        (rank_me(&id, RANK_ME_EPS).unwrap(), 8.0),
        (coherence(&id).unwrap(), 1.0),
        (pseudo_condition(&id).unwrap(), 1.0),
        (self_cluster(&same).unwrap(), 1.0),
    ];
    let anchor_err = anchors.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    report(
        5,
        "spectral metric suite",
        worst < 1e-10 && anchor_err <= 1e-12,
        format!("max relative error vs oracles {worst:.2e} (< 1e-10; SelfCluster against max(|value|, 1)); max anchor error {anchor_err:.2e} (<= 1e-12)"),
    );
}

#[test]
fn criterion_6_graph_statistics_exactness() {
    let mut r = rng(606);
    let mut int_mismatch = 0;
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = r.random_range(1..=30);
        let p = r.random_range(0.0..0.6);
        let g = erdos_renyi(n, p, &mut r);
        let s = graph_stats(&g);
        let b = brute(&g);
        if s.num_nodes != n
            || s.num_edges != b.edges
            || s.num_triangles != b.triangles
            || s.num_connected_components != b.components
            || s.giant_component_size != b.giant
        {
            int_mismatch += 1;
        }
        let assort = b.assortativity.unwrap_or(0.0);
        let pr_mass: f64 = b.pagerank.iter().sum();
        let pr_vec = pagerank(&g, 0.85, 1e-12)
            .iter()
            .zip(&b.pagerank)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        for d in [
            (s.avg_degree - b.avg_degree).abs(),
            (s.density - b.density).abs(),
            (s.avg_clustering_coefficient - b.clustering).abs(),
            (s.transitivity - b.transitivity).abs(),
            (s.degree_assortativity - assort).abs(),
            (s.pagerank_sum - pr_mass).abs(),
            pr_vec,
        ] {
            worst = worst.max(d);
        }
    }
    report(
        6,
        "graph statistics exactness",
        int_mismatch == 0 && worst < 1e-9,
        format!("200 random graphs n <= 30: integer mismatches {int_mismatch}; max real-valued error {worst:.2e} (< 1e-9)"),
    );
}

#[test]
fn criterion_7_tuner_end_to_end() {
    let t = Instant::now();
    let g = sample_graphon(&scenario(Scenario::TwoBlock), 400, 7).unwrap().graph;
    let grid = HyperGrid::product(&[("p", vec![json!(1), json!(8)]), ("s", vec![json!(0), json!(2)])]).unwrap();
    let cfg = TuneConfig {
        n_b: 3,
        bootstrap: BootstrapConfig::solution_2(20, 7),
        ..TuneConfig::default()
    };
    let a = tune(&g, &grid, &EmbedderSpec::Builtin, &cfg).unwrap();
    let b = tune(&g, &grid, &EmbedderSpec::Builtin, &cfg).unwrap();
    let identical = serde_json::to_vec(&a).unwrap() == serde_json::to_vec(&b).unwrap();
    let p_of = |i: usize| a.entries[i].theta["p"].as_u64().unwrap();
    let p1_screened = (0..a.entries.len())
        .filter(|&i| p_of(i) == 1)
        .all(|i| !a.entries[i].passed_screen && a.entries[i].stable_ranks.iter().all(|&s| s == 1.0));
    let chosen_p = a.selected.map(p_of);
    let screens: Vec<String> = a
        .entries
        .iter()
        .map(|e| format!("{}:{:.3}", serde_json::to_string(&e.theta).unwrap(), e.mean_stable_rank.unwrap_or(f64::NAN)))
        .collect();
    let elapsed = t.elapsed();
    report(
        7,
        "tuner end to end",
        p1_screened && chosen_p == Some(8) && identical && elapsed < Duration::from_secs(180),
        format!(
            "mean stable ranks [{}]; p=1 screened {p1_screened}; selected p={chosen_p:?}; deterministic {identical}; {elapsed:.2?} for two runs",
            screens.join(", ")
        ),
    );
}

/// Runs only when `LOBSTUR_CORA_EDGES` names a Cora edge list.
#[test]
fn criterion_8_cora_reproduction() {
    let Some(path) = std::env::var_os("LOBSTUR_CORA_EDGES").map(PathBuf::from) else {
        let mut out = std::io::stdout().lock();
        let _ = out.write_all(b"acceptance criterion 8 [SKIP] Cora reproduction: set LOBSTUR_CORA_EDGES to an edge list to run\n");
        return;
    };
    let g = io::load_graph(&path, None).unwrap();
    let reps = make_replicas(&g, 100, &BootstrapConfig::solution_2(20, 8)).unwrap();
    let ratio = mean_edges(&reps) / g.num_edges() as f64;
    let cc0 = graph_stats(&g).avg_clustering_coefficient;
    let cc = reps.iter().map(|r| graph_stats(r).avg_clustering_coefficient).sum::<f64>() / reps.len() as f64;
    report(
        8,
        "Cora reproduction",
        (0.96..=1.0).contains(&ratio) && cc < 0.5 * cc0,
        format!(
            "|E|={} mean|E'|={:.2} ratio={ratio:.4} (band [0.96, 1.00]); clustering {cc:.4} vs original {cc0:.4} (must be < half)",
            g.num_edges(),
            mean_edges(&reps)
        ),
    );
}
