//! Command-line embedder adapter. Inputs are written to a scratch
//! directory, the template is expanded and run through `sh -c`, and the
//! `{out}` file is read back as an `n_test x p` matrix.

use std::fs;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::Theta;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::io;
use crate::metrics::EmbeddingMatrix;

pub const PLACEHOLDERS: [&str; 6] = [
    "{train_edges}",
    "{train_features}",
    "{test_edges}",
    "{test_features}",
    "{theta}",
    "{out}",
];

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(3600);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalEmbedder {
    pub template: String,
    #[serde(with = "secs")]
    pub timeout: Duration,
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

impl ExternalEmbedder {
    /// The template must name `{out}`; the other placeholders are optional.
    pub fn new(template: impl Into<String>) -> Result<Self> {
        let template = template.into();
        if !template.contains("{out}") {
            return Err(Error::invalid(format!(
                "embedder command must contain the {{out}} placeholder: {template}"
            )));
        }
        Ok(Self {
            template,
            timeout: DEFAULT_TIMEOUT,
        })
    }

    pub fn with_timeout(self, timeout: Duration) -> Self {
        Self { timeout, ..self }
    }
}

/// An embedding produced by an external command plus the SHA-256 of its
/// output file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalOutput {
    pub embedding: EmbeddingMatrix,
    pub sha256: String,
}

fn quote(p: &Path) -> String {
    format!("'{}'", p.display().to_string().replace('\'', r"'\''"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_graph(g: &Graph, edges: &Path, features: &Path) -> Result<()> {
    io::save_graph(g, edges, Some(features))?;
    if g.features().is_none() {
        fs::write(features, "").map_err(|e| Error::io(features, e))?;
    }
    Ok(())
}

fn tail(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap_or_default();
    let lines: Vec<&str> = text.lines().collect();
    lines[lines.len().saturating_sub(10)..].join("\n")
}

/// Train on `train` and embed `test` with the external command. `seed` is
/// passed to the command as the `_seed` key of the theta file.
pub fn external_embed(
    spec: &ExternalEmbedder,
    theta: &Theta,
    train: &Graph,
    test: &Graph,
    seed: u64,
) -> Result<ExternalOutput> {
    let dir = tempfile::Builder::new()
        .prefix("lobstur-embed-")
        .tempdir()
        .map_err(|e| Error::io(std::env::temp_dir(), e))?;
    let at = |name: &str| dir.path().join(name);
    let paths = [
        at("train_edges.txt"),
        at("train_features.csv"),
        at("test_edges.txt"),
        at("test_features.csv"),
        at("theta.json"),
        at("out.csv"),
    ];
    write_graph(train, &paths[0], &paths[1])?;
    write_graph(test, &paths[2], &paths[3])?;
    let mut t = theta.clone();
    t.insert("_seed".into(), Value::from(seed));
    fs::write(&paths[4], serde_json::to_string_pretty(&t)?).map_err(|e| Error::io(&paths[4], e))?;

    let mut cmd = spec.template.clone();
    for (ph, path) in PLACEHOLDERS.iter().zip(&paths) {
        cmd = cmd.replace(ph, &quote(path));
    }
    let log = at("stderr.log");
    let stderr = fs::File::create(&log).map_err(|e| Error::io(&log, e))?;
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&cmd)
        .current_dir(dir.path())
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(stderr)
        .spawn()
        .map_err(|e| Error::Embedder(format!("could not start `sh -c {cmd}`: {e}")))?;

    let start = Instant::now();
    let mut wait = Duration::from_millis(2);
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) if start.elapsed() >= spec.timeout => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(Error::Embedder(format!(
                    "embedder timed out after {:.1}s",
                    spec.timeout.as_secs_f64()
                )));
            }
            Ok(None) => {
                std::thread::sleep(wait);
                wait = (wait * 2).min(Duration::from_millis(100));
            }
            Err(e) => return Err(Error::Embedder(format!("waiting for embedder: {e}"))),
        }
    };
    if !status.success() {
        return Err(Error::Embedder(format!("embedder exited with {status}: {}", tail(&log))));
    }
    let out = &paths[5];
    let bytes = fs::read(out).map_err(|e| Error::Embedder(format!("embedder wrote no output: {e}")))?;
    let m = io::load_matrix(out).map_err(|e| Error::Embedder(format!("malformed embedder output: {e}")))?;
    if m.nrows() != test.n() {
        return Err(Error::Embedder(format!(
            "embedder returned {} rows for a {}-node test graph",
            m.nrows(),
            test.n()
        )));
    }
    let embedding = EmbeddingMatrix::new(m).map_err(|e| Error::Embedder(format!("unusable embedder output: {e}")))?;
    Ok(ExternalOutput {
        embedding,
        sha256: sha256_hex(&bytes),
    })
}
