//! Atomic output handling and run manifests.
//!
//! Directory outputs are assembled in a hidden sibling staging directory
//! and renamed into place; file outputs are written to a temporary file in
//! the target directory and persisted. Nothing appears at the target path
//! unless the whole command succeeded.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use lobstur_core::tuner::sha256_hex;
use serde_json::{json, Value};
use tempfile::TempDir;

use crate::error::{CliError, CliResult};

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

fn parent_of(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Everything needed to reproduce a run.
pub struct Manifest {
    subcommand: &'static str,
    config: Value,
    seed: Option<u64>,
    derived_seeds: Value,
    inputs: Vec<Value>,
}

impl Manifest {
    pub fn new(subcommand: &'static str, config: Value, seed: Option<u64>) -> Self {
        Self {
            subcommand,
            config,
            seed,
            derived_seeds: Value::Null,
            inputs: Vec::new(),
        }
    }

    pub fn derived_seeds(mut self, seeds: Value) -> Self {
        self.derived_seeds = seeds;
        self
    }

    /// Record the SHA-256 digest of an input file.
    pub fn input(&mut self, role: &str, path: &Path) -> CliResult<()> {
        let digest = sha256_file(path)?;
        self.inputs.push(json!({
            "role": role,
            "path": path.display().to_string(),
            "sha256": digest,
        }));
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "tool": "lobstur",
            "tool_version": env!("CARGO_PKG_VERSION"),
            "subcommand": self.subcommand,
            "config": self.config,
            "seed": self.seed,
            "derived_seeds": self.derived_seeds,
            "inputs": self.inputs,
        })
    }
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialise");
    s.push('\n');
    s
}

/// Output directory under construction.
pub struct Staging {
    dir: TempDir,
    target: PathBuf,
}

impl Staging {
    pub fn new(target: &Path) -> CliResult<Self> {
        if target.exists() && !target.is_dir() {
            return Err(CliError::data(format!(
                "{} exists and is not a directory",
                target.display()
            )));
        }
        let parent = parent_of(target);
        fs::create_dir_all(&parent)
            .map_err(|e| CliError::data(format!("{}: {e}", parent.display())))?;
        let name = target
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".into());
        let dir = tempfile::Builder::new()
            .prefix(&format!(".{name}.staging-"))
            .tempdir_in(&parent)
            .map_err(|e| CliError::data(format!("{}: {e}", parent.display())))?;
        Ok(Self {
            dir,
            target: target.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> CliResult<()> {
        let p = self.path(name);
        fs::write(&p, contents).map_err(|e| CliError::data(format!("{}: {e}", p.display())))
    }

    /// Move the staged directory onto the target, replacing any previous
    /// output there.
    pub fn commit(self, manifest: &Manifest) -> CliResult<()> {
        self.write("manifest.json", &pretty(&manifest.to_json()))?;
        let staged = self.dir.keep();
        let fail = |e: std::io::Error| CliError::data(format!("{}: {e}", self.target.display()));
        if self.target.exists() {
            let old = tempfile::Builder::new()
                .prefix(".replaced-")
                .tempdir_in(parent_of(&self.target))
                .map_err(fail)?
                .keep();
            let trash = old.join("old");
            fs::rename(&self.target, &trash).map_err(fail)?;
            fs::rename(&staged, &self.target).map_err(fail)?;
            let _ = fs::remove_dir_all(&old);
        } else {
            fs::rename(&staged, &self.target).map_err(fail)?;
        }
        Ok(())
    }
}

/// `report.json` -> `report.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    out.with_file_name(format!("{stem}.manifest.json"))
}

fn persist(path: &Path, contents: &str) -> CliResult<()> {
    let parent = parent_of(path);
    fs::create_dir_all(&parent)
        .map_err(|e| CliError::data(format!("{}: {e}", parent.display())))?;
    let fail = |e: std::io::Error| CliError::data(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(&parent).map_err(fail)?;
    tmp.write_all(contents.as_bytes()).map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

/// Write a JSON report and its sibling manifest.
pub fn emit_report(out: &Path, report: &Value, manifest: &Manifest) -> CliResult<()> {
    persist(out, &pretty(report))?;
    persist(&manifest_path(out), &pretty(&manifest.to_json()))
}
