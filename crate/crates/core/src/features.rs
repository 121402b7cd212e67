//! Initial node features: Local Degree Profile, file entropy, and both.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::tensor::Tensor2;

pub const LDP_WIDTH: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureMode {
    Ldp,
    Entropy,
    LdpEntropy,
}

impl FeatureMode {
    pub const ALL: [FeatureMode; 3] = [FeatureMode::Ldp, FeatureMode::Entropy, FeatureMode::LdpEntropy];

    pub fn width(self) -> usize {
        match self {
            FeatureMode::Ldp => LDP_WIDTH,
            FeatureMode::Entropy => 1,
            FeatureMode::LdpEntropy => LDP_WIDTH + 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMode::Ldp => "ldp",
            FeatureMode::Entropy => "entropy",
            FeatureMode::LdpEntropy => "ldp+entropy",
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ldp" => Ok(FeatureMode::Ldp),
            "entropy" => Ok(FeatureMode::Entropy),
            "ldp+entropy" | "ldp_entropy" => Ok(FeatureMode::LdpEntropy),
            other => Err(Error::validation(format!(
                "unknown feature mode {other:?} (expected ldp, entropy, ldp+entropy)"
            ))),
        }
    }
}

/// Shannon entropy of a byte string in bits per byte, in `[0, 8]`.
pub fn shannon_entropy(bytes: &[u8]) -> Result<f64> {
    if bytes.is_empty() {
        return Err(Error::validation("entropy of an empty byte sequence is undefined"));
    }
    let mut counts = [0u64; 256];
    for &b in bytes {
        counts[b as usize] += 1;
    }
    let len = bytes.len() as f64;
    let h = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / len;
            -p * p.log2()
        })
        .sum::<f64>();
    // a single symbol gives -1·log2(1) = -0.0
    Ok(h.max(0.0))
}

/// Per-node `[deg, min, max, mean, std]` of neighbour degrees on the undirected view.
///
/// Degree counts distinct neighbours; a self-loop makes the node its own
/// neighbour. `std` is the population standard deviation. Isolated nodes
/// get all zeros.
pub fn local_degree_profile(g: &Graph) -> Tensor2 {
    let adj = g.undirected_neighbors();
    let degree: Vec<f64> = adj.iter().map(|n| n.len() as f64).collect();
    let mut out = Tensor2::zeros(g.node_count(), LDP_WIDTH);
    for (v, neighbors) in adj.iter().enumerate() {
        let row = out.row_mut(v);
        row[0] = degree[v];
        if neighbors.is_empty() {
            continue;
        }
        let k = neighbors.len() as f64;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for &u in neighbors {
            let d = degree[u];
            min = min.min(d);
            max = max.max(d);
            sum += d;
        }
        let mean = sum / k;
        let var = neighbors
            .iter()
            .map(|&u| (degree[u] - mean).powi(2))
            .sum::<f64>()
            / k;
        row[1] = min;
        row[2] = max;
        row[3] = mean;
        row[4] = var.sqrt();
    }
    out
}

/// Node feature matrix for `mode`. Entropy is broadcast to every node; in the
/// combined mode the LDP columns come first.
pub fn build_features(g: &Graph, entropy: f64, mode: FeatureMode) -> Result<Tensor2> {
    if !(0.0..=8.0).contains(&entropy) {
        return Err(Error::validation(format!("entropy {entropy} outside [0, 8]")));
    }
    let n = g.node_count();
    Ok(match mode {
        FeatureMode::Ldp => local_degree_profile(g),
        FeatureMode::Entropy => Tensor2::filled(n, 1, entropy),
        FeatureMode::LdpEntropy => local_degree_profile(g).hcat(&Tensor2::filled(n, 1, entropy)),
    })
}
