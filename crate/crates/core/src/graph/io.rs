//! Canonical on-disk dataset layout.
//!
//! ```text
//! <root>/manifest.jsonl      {"id": ..., "label": 0|1, "entropy": ..., "fcg": "<rel>", "pcg": "<rel>"}
//! <root>/<rel>               "# nodes=<N> directed=true" then "<source> <target>" lines
//! <root>/provenance.txt      optional free text
//! ```

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Dataset, Graph, Label, SamplePair};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
const PROVENANCE_FILE: &str = "provenance.txt";

#[derive(Debug, Serialize, Deserialize)]
struct ManifestRow {
    id: String,
    label: i64,
    entropy: f64,
    fcg: String,
    pcg: String,
}

/// Reads and validates a dataset. Graphs come back canonicalized.
pub fn load_dataset(root: &Path) -> Result<Dataset> {
    let manifest_path = root.join(MANIFEST_FILE);
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset directory not found"),
        ));
    }
    if !manifest_path.is_file() {
        return Err(Error::validation(format!(
            "missing manifest {}",
            manifest_path.display()
        )));
    }
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;

    let mut seen = HashSet::new();
    let mut samples = Vec::new();
    for (idx, line) in text.split('\n').enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row: ManifestRow = serde_json::from_str(line)
            .map_err(|e| Error::parse(&manifest_path, lineno, e.to_string()))?;
        let label = Label::from_index(row.label)
            .map_err(|e| Error::parse(&manifest_path, lineno, e.to_string()))?;
        if !seen.insert(row.id.clone()) {
            return Err(Error::parse(
                &manifest_path,
                lineno,
                format!("duplicate id {:?}", row.id),
            ));
        }
        if !(0.0..=8.0).contains(&row.entropy) {
            return Err(Error::parse(
                &manifest_path,
                lineno,
                format!("entropy {} outside [0, 8]", row.entropy),
            ));
        }
        let fcg = read_edge_file(&root.join(&row.fcg))?.canonicalize();
        let pcg = read_edge_file(&root.join(&row.pcg))?.canonicalize();
        samples.push(SamplePair {
            id: row.id,
            label,
            fcg,
            pcg,
            entropy: row.entropy,
        });
    }

    let provenance_path = root.join(PROVENANCE_FILE);
    let provenance = if provenance_path.is_file() {
        fs::read_to_string(&provenance_path).map_err(|e| Error::io(&provenance_path, e))?
    } else {
        String::new()
    };
    Dataset::new(samples, provenance)
}

/// Writes `dataset` under `root`, creating directories as needed.
///
/// Graph files are named by sample position so ids never need escaping.
pub fn store_dataset(dataset: &Dataset, root: &Path) -> Result<()> {
    dataset.validate()?;
    for sub in ["fcg", "pcg"] {
        let dir = root.join(sub);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    let mut manifest = String::new();
    for (i, s) in dataset.samples.iter().enumerate() {
        let fcg_rel = format!("fcg/{i:06}.edges");
        let pcg_rel = format!("pcg/{i:06}.edges");
        write_edge_file(&root.join(&fcg_rel), &s.fcg.canonicalize())?;
        write_edge_file(&root.join(&pcg_rel), &s.pcg.canonicalize())?;
        let row = ManifestRow {
            id: s.id.clone(),
            label: s.label.index() as i64,
            entropy: s.entropy,
            fcg: fcg_rel,
            pcg: pcg_rel,
        };
        manifest.push_str(&serde_json::to_string(&row).expect("manifest row serializes"));
        manifest.push('\n');
    }
    write_file(&root.join(MANIFEST_FILE), manifest.as_bytes())?;
    if !dataset.provenance.is_empty() {
        write_file(&root.join(PROVENANCE_FILE), dataset.provenance.as_bytes())?;
    }
    Ok(())
}

pub fn read_edge_file(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_text(&text, path)
}

fn parse_edge_text(text: &str, path: &Path) -> Result<Graph> {
    let mut lines = text.split('\n').enumerate();
    let node_count = match lines.next() {
        Some((_, header)) => parse_header(header).ok_or_else(|| {
            Error::parse(
                path,
                1,
                format!("expected header \"# nodes=<N> directed=true\", found {header:?}"),
            )
        })?,
        None => return Err(Error::parse(path, 1, "empty edge file")),
    };
    if node_count == 0 {
        return Err(Error::parse(path, 1, "graph must have at least one node"));
    }

    let mut edges = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split(' ');
        let edge = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => a.parse::<usize>().ok().zip(b.parse::<usize>().ok()),
            _ => None,
        };
        let (s, t) = edge.ok_or_else(|| {
            Error::parse(
                path,
                lineno,
                format!("malformed edge line {line:?}; expected \"<source> <target>\""),
            )
        })?;
        for v in [s, t] {
            if v >= node_count {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("endpoint {v} ≥ node_count {node_count}"),
                ));
            }
        }
        edges.push((s, t));
    }
    Graph::new(node_count, edges)
}

fn parse_header(line: &str) -> Option<usize> {
    let rest = line.strip_prefix("# nodes=")?;
    let n = rest.strip_suffix(" directed=true")?;
    n.parse().ok()
}

pub fn write_edge_file(path: &Path, g: &Graph) -> Result<()> {
    let mut out = String::with_capacity(16 + g.edge_count() * 8);
    let _ = writeln!(out, "# nodes={} directed=true", g.node_count());
    for &(s, t) in g.edges() {
        let _ = writeln!(out, "{s} {t}");
    }
    write_file(path, out.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(PathBuf::from(path), e))
}
