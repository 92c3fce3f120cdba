use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lobstur(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lobstur"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn synth_bootstrap_stats_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&lobstur(
        d,
        &[
            "synth",
            "--scenario",
            "2",
            "--n",
            "300",
            "--seed",
            "4",
            "--out-dir",
            "g",
        ],
    ));
    for f in ["edges.txt", "features.csv", "latents.csv", "manifest.json"] {
        assert!(d.join("g").join(f).is_file(), "{f}");
    }
    ok(&lobstur(
        d,
        &[
            "bootstrap",
            "--graph",
            "g",
            "--count",
            "6",
            "--seed",
            "9",
            "--k",
            "20",
            "--out-dir",
            "reps",
        ],
    ));
    let manifest = read_json(&d.join("reps/manifest.json"));
    assert_eq!(manifest["subcommand"], "bootstrap");
    assert_eq!(
        manifest["derived_seeds"]["replicas"]
            .as_array()
            .unwrap()
            .len(),
        6
    );
    assert_eq!(
        manifest["config"]["bootstrap"]["knn_for_edges"],
        "shortest-path"
    );
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);

    ok(&lobstur(
        d,
        &[
            "stats",
            "--graph",
            "g",
            "--replicas-dir",
            "reps",
            "--out",
            "report.json",
        ],
    ));
    let report = read_json(&d.join("report.json"));
    let edges = &report["num_edges"];
    assert_eq!(edges["count"], 6);
    let (orig, mean) = (
        edges["original"].as_f64().unwrap(),
        edges["mean"].as_f64().unwrap(),
    );
    assert!(mean <= orig && mean >= 0.95 * orig, "mean {mean} vs {orig}");
    assert!(d.join("report.manifest.json").is_file());
}

#[test]
fn bootstrap_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&lobstur(
        d,
        &[
            "synth",
            "--scenario",
            "1",
            "--n",
            "150",
            "--seed",
            "1",
            "--out-dir",
            "g",
        ],
    ));
    let args = |out: &'static str| {
        [
            "bootstrap",
            "--graph",
            "g/edges.txt",
            "--features",
            "g/features.csv",
            "--knn-source",
            "solution-1",
            "--count",
            "2",
            "--seed",
            "3",
            "--out-dir",
            out,
        ]
    };
    ok(&lobstur(d, &args("a")));
    ok(&lobstur(d, &args("b")));
    for f in ["replica_0001.edges.txt", "replica_0001.features.csv"] {
        assert_eq!(
            fs::read(d.join("a").join(f)).unwrap(),
            fs::read(d.join("b").join(f)).unwrap()
        );
    }
}

#[test]
fn usage_errors_exit_one_and_write_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let out = lobstur(
        d,
        &[
            "synth",
            "--scenario",
            "2",
            "--n",
            "50",
            "--seed",
            "1",
            "--out-dir",
            "g",
            "--bogus",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let out = lobstur(
        d,
        &[
            "synth",
            "--scenario",
            "nine",
            "--n",
            "50",
            "--seed",
            "1",
            "--out-dir",
            "g",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_lobstur"))
        .current_dir(d)
        .env("LOBSTUR_THREADS", "zero")
        .args([
            "synth",
            "--scenario",
            "2",
            "--n",
            "50",
            "--seed",
            "1",
            "--out-dir",
            "g",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(fs::read_dir(d).unwrap().count(), 0);
    assert_eq!(lobstur(d, &["--help"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("bad.txt"), "0 1\n1 x\n").unwrap();
    let out = lobstur(
        d,
        &[
            "bootstrap",
            "--graph",
            "bad.txt",
            "--seed",
            "1",
            "--out-dir",
            "r",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    // feature kNN on a graph without features
    fs::write(d.join("e.txt"), "0 1\n1 2\n").unwrap();
    let out = lobstur(
        d,
        &[
            "bootstrap",
            "--graph",
            "e.txt",
            "--knn-source",
            "feature",
            "--k",
            "1",
            "--seed",
            "1",
            "--out-dir",
            "r",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!d.join("r").exists());
}

#[test]
fn metrics_report() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let a: String = (0..40)
        .map(|i| format!("{},{},{}\n", i % 7 + 1, (i * i) % 11, i % 3))
        .collect();
    let b: String = (0..40)
        .map(|i| {
            format!(
                "{},{}\n",
                2.0 * (i % 7) as f64 + 1.0,
                (i % 3) as f64 - 0.5 * ((i * i) % 11) as f64
            )
        })
        .collect();
    fs::write(d.join("a.csv"), a).unwrap();
    fs::write(d.join("b.csv"), b).unwrap();
    ok(&lobstur(
        d,
        &[
            "metrics",
            "--a",
            "a.csv",
            "--b",
            "b.csv",
            "--which",
            "cca,stablerank,rankme,coherence,kappa,selfcluster,neighbors,ari,nmi",
            "--ridge",
            "0",
            "--neighbors",
            "5",
            "--clusters",
            "3",
            "--out",
            "m.json",
        ],
    ));
    let m = read_json(&d.join("m.json"));
    // b spans two linear combinations of a's columns
    let rho = m["cca_correlations"].as_array().unwrap();
    assert_eq!(rho.len(), 2);
    assert!(rho.iter().all(|r| (r.as_f64().unwrap() - 1.0).abs() < 1e-9));
    assert!(m["cca_alignment"].as_f64().unwrap() < 1e-6);
    for k in [
        "stable_rank_a",
        "stable_rank_b",
        "rank_me_a",
        "coherence_b",
        "pseudo_condition_a",
        "self_cluster_b",
        "neighbor_kept_ratio",
        "ari",
        "nmi",
    ] {
        assert!(m[k].is_number(), "{k} missing");
    }
    assert_eq!(
        read_json(&d.join("m.manifest.json"))["config"]["ridge"]["absolute"],
        0.0
    );

    let out = lobstur(
        d,
        &[
            "metrics", "--a", "a.csv", "--which", "cca", "--out", "x.json",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(!d.join("x.json").exists());
}

#[test]
fn tune_builtin_and_failing_external() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&lobstur(
        d,
        &[
            "synth",
            "--scenario",
            "two-block",
            "--n",
            "150",
            "--seed",
            "3",
            "--out-dir",
            "g",
        ],
    ));
    fs::write(
        d.join("grid.json"),
        r#"[{"p": 1, "s": 1}, {"p": 4, "s": 1}]"#,
    )
    .unwrap();
    let base = [
        "tune",
        "--graph",
        "g",
        "--grid",
        "grid.json",
        "--n-b",
        "1",
        "--seed",
        "5",
    ];

    let mut args = base.to_vec();
    args.extend(["--out", "t.json"]);
    ok(&lobstur(d, &args));
    let r = read_json(&d.join("t.json"));
    assert_eq!(r["entries"].as_array().unwrap().len(), 2);
    assert_eq!(r["entries"][0]["passed_screen"], false);
    assert!(d.join("t.manifest.json").is_file());

    let mut args = base.to_vec();
    args.extend(["--embedder", "exit 1; {out}", "--out", "f.json"]);
    let out = lobstur(d, &args);
    assert_eq!(out.status.code(), Some(3));
    let r = read_json(&d.join("f.json"));
    assert!(r["entries"]
        .as_array()
        .unwrap()
        .iter()
        .all(|e| e["failed"] == true));

    let mut args = base.to_vec();
    args.extend(["--embedder", "cp {test_features}", "--out", "u.json"]);
    assert_eq!(lobstur(d, &args).status.code(), Some(1));
}
