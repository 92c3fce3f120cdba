//! Edge-list and matrix file formats.
//!
//! Edge files hold one whitespace-separated `u v` pair per line. An optional
//! first line `#n <count>` fixes the node count; other lines starting with
//! `#` are ignored. Matrices are headerless, row-major CSV written with the
//! shortest decimal representation that round-trips exactly.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Read a graph from an edge file and an optional feature CSV.
///
/// Without a `#n` header the node count is `1 + max id`, raised to the
/// feature row count when a feature file is given.
pub fn load_graph(edge_path: &Path, feature_path: Option<&Path>) -> Result<Graph> {
    let (header_n, edges) = read_edges(edge_path)?;
    let features = feature_path.map(load_matrix).transpose()?;
    let max_id = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
    let n = match (header_n, &features) {
        (Some(n), _) => {
            if max_id > n {
                return Err(Error::invalid(format!(
                    "{}: node id {} exceeds declared count {n}",
                    edge_path.display(),
                    max_id - 1
                )));
            }
            n
        }
        (None, Some(x)) => max_id.max(x.nrows()),
        (None, None) => max_id,
    };
    if let (Some(x), Some(fp)) = (&features, feature_path) {
        if x.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "{}: {} feature rows for {n} nodes",
                fp.display(),
                x.nrows()
            )));
        }
    }
    Graph::new(n, edges, features)
}

fn read_edges(path: &Path) -> Result<(Option<usize>, Vec<(usize, usize)>)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header = None;
    let mut edges = Vec::new();
    let mut seen_data = false;
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            msg,
        };
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(count) = rest.strip_prefix('n') {
                if !seen_data && header.is_none() {
                    let c = count
                        .trim()
                        .parse::<usize>()
                        .map_err(|_| parse_err(format!("bad node-count header {line:?}")))?;
                    header = Some(c);
                }
            }
            continue;
        }
        seen_data = true;
        let mut toks = line.split_whitespace();
        let mut next = || -> Result<usize> {
            let t = toks
                .next()
                .ok_or_else(|| parse_err("expected two node ids".into()))?;
            t.parse::<usize>()
                .map_err(|_| parse_err(format!("non-integer node id {t:?}")))
        };
        let u = next()?;
        let v = next()?;
        if toks.next().is_some() {
            return Err(parse_err("more than two tokens on edge line".into()));
        }
        edges.push((u, v));
    }
    Ok((header, edges))
}

/// Write the edge file (always with a `#n` header) and, when present, the
/// feature matrix.
pub fn save_graph(g: &Graph, edge_path: &Path, feature_path: Option<&Path>) -> Result<()> {
    let mut buf = String::with_capacity(16 * g.num_edges() + 16);
    buf.push_str(&format!("#n {}\n", g.n()));
    for &(u, v) in g.edges() {
        buf.push_str(&format!("{u} {v}\n"));
    }
    fs::write(edge_path, buf).map_err(|e| Error::io(edge_path, e))?;
    if let (Some(x), Some(fp)) = (g.features(), feature_path) {
        save_matrix(x, fp)?;
    }
    Ok(())
}

pub fn save_matrix(m: &DMatrix<f64>, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_matrix(m, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_matrix<W: Write>(m: &DMatrix<f64>, w: &mut W) -> std::io::Result<()> {
    let mut line = String::new();
    for i in 0..m.nrows() {
        line.clear();
        for j in 0..m.ncols() {
            if j > 0 {
                line.push(',');
            }
            // Display for f64 is the shortest exact round-trip form.
            line.push_str(&format!("{}", m[(i, j)]));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn load_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let mut data = Vec::new();
    let mut ncols = None;
    let mut nrows = 0;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        match ncols {
            None => ncols = Some(rec.len()),
            Some(c) if c != rec.len() => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    msg: format!("expected {c} columns, found {}", rec.len()),
                })
            }
            _ => {}
        }
        for field in rec.iter() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("not a number: {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    msg: format!("non-finite value {field:?}"),
                });
            }
            data.push(v);
        }
        nrows += 1;
    }
    Ok(DMatrix::from_row_slice(nrows, ncols.unwrap_or(0), &data))
}
