//! Graph and sample-pair data model.
//!
//! Graphs are directed edge lists over contiguously numbered nodes. Each
//! binary contributes a [`SamplePair`]: its function call graph, its
//! process call graph, a label and the file-level byte entropy.

mod io;

pub use io::{load_dataset, read_edge_file, store_dataset, write_edge_file, MANIFEST_FILE};

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Directed graph over nodes `0..node_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph, checking `node_count >= 1` and every endpoint range.
    pub fn new(node_count: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::validation("graph must have at least one node"));
        }
        validate_edges(node_count, &edges)?;
        Ok(Graph { node_count, edges })
    }

    /// Single node, no edges. Used for binaries whose sandbox run spawned no processes.
    pub fn singleton() -> Self {
        Graph {
            node_count: 1,
            edges: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted, deduplicated copy. Self-loops are kept.
    pub fn canonicalize(&self) -> Graph {
        let mut edges = self.edges.clone();
        edges.sort_unstable();
        edges.dedup();
        Graph {
            node_count: self.node_count,
            edges,
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.edges.windows(2).all(|w| w[0] < w[1])
    }

    /// Distinct neighbours of every node in the undirected view.
    ///
    /// A self-loop makes a node its own neighbour. Lists are sorted.
    pub fn undirected_neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for &(s, t) in &self.edges {
            adj[s].push(t);
            if s != t {
                adj[t].push(s);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    /// Relabels nodes: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.node_count {
            return Err(Error::validation(format!(
                "permutation length {} != node_count {}",
                perm.len(),
                self.node_count
            )));
        }
        let edges = self.edges.iter().map(|&(s, t)| (perm[s], perm[t])).collect();
        Graph::new(self.node_count, edges)
    }
}

/// Validates endpoints, naming the first offending edge.
pub fn validate_edges(node_count: usize, edges: &[(usize, usize)]) -> Result<()> {
    for (i, &(s, t)) in edges.iter().enumerate() {
        for endpoint in [s, t] {
            if endpoint >= node_count {
                return Err(Error::validation(format!(
                    "edge {i} endpoint {endpoint} ≥ node_count {node_count}"
                )));
            }
        }
    }
    Ok(())
}

/// Checks a raw edge list and returns its canonical graph.
pub fn canonicalize(node_count: usize, edges: Vec<(usize, usize)>) -> Result<Graph> {
    Ok(Graph::new(node_count, edges)?.canonicalize())
}

/// Disjoint union: `g2` node `i` becomes `i + g1.node_count()`. No cross edges are added.
pub fn merge_graphs(g1: &Graph, g2: &Graph) -> Graph {
    let offset = g1.node_count;
    let mut edges = Vec::with_capacity(g1.edges.len() + g2.edges.len());
    edges.extend_from_slice(&g1.edges);
    edges.extend(g2.edges.iter().map(|&(s, t)| (s + offset, t + offset)));
    Graph {
        node_count: g1.node_count + g2.node_count,
        edges,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Benign = 0,
    Malicious = 1,
}

impl Label {
    pub fn from_index(v: i64) -> Result<Self> {
        match v {
            0 => Ok(Label::Benign),
            1 => Ok(Label::Malicious),
            _ => Err(Error::validation("label must be 0 or 1")),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// One binary: aligned FCG and PCG plus label and file entropy.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePair {
    pub id: String,
    pub label: Label,
    pub fcg: Graph,
    pub pcg: Graph,
    /// Shannon entropy of the raw file, bits per byte.
    pub entropy: f64,
}

impl SamplePair {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=8.0).contains(&self.entropy) {
            return Err(Error::validation(format!(
                "sample {}: entropy {} outside [0, 8]",
                self.id, self.entropy
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<SamplePair>,
    /// Free-text metadata such as source, seed and tool versions.
    pub provenance: String,
}

impl Dataset {
    pub fn new(samples: Vec<SamplePair>, provenance: impl Into<String>) -> Result<Self> {
        let ds = Dataset {
            samples,
            provenance: provenance.into(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::validation("dataset is empty"));
        }
        let mut seen = HashSet::new();
        for s in &self.samples {
            if !seen.insert(s.id.as_str()) {
                return Err(Error::validation(format!("duplicate sample id {:?}", s.id)));
            }
            s.validate()?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Same samples with both graphs canonicalized.
    pub fn canonicalized(&self) -> Dataset {
        Dataset {
            samples: self
                .samples
                .iter()
                .map(|s| SamplePair {
                    fcg: s.fcg.canonicalize(),
                    pcg: s.pcg.canonicalize(),
                    ..s.clone()
                })
                .collect(),
            provenance: self.provenance.clone(),
        }
    }
}
