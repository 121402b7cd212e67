//! Learnable parameters of a model and their initialization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ArchKind, ModelConfig};
use crate::error::{Error, Result};
use crate::tensor::Tensor2;

pub const NUM_CLASSES: usize = 2;

/// Gate logits `w`; the fusion weights are `softmax(w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateParams {
    pub w: [f64; 2],
}

impl GateParams {
    pub fn alpha(&self) -> [f64; 2] {
        let m = self.w[0].max(self.w[1]);
        let e0 = (self.w[0] - m).exp();
        let e1 = (self.w[1] - m).exp();
        let s = e0 + e1;
        [e0 / s, e1 / s]
    }
}

/// Weights of one encoder branch, laid out per architecture:
/// GCN, MLP: one `(in, dim)` matrix per layer;
/// SAGE: one `(2·in, dim)` matrix per layer;
/// GIN: `(in, dim)` then `(dim, dim)` per layer;
/// SGC: a single `(in, dim)` matrix applied after all propagation steps.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchParams {
    pub weights: Vec<Tensor2>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub weight: Tensor2,
    /// `1 × out`.
    pub bias: Tensor2,
}

/// All parameters. Branches never share weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub branches: Vec<BranchParams>,
    pub gate: GateParams,
    pub head: Vec<DenseParams>,
}

/// Weight shapes of one branch.
pub fn branch_shapes(arch: ArchKind, in_dim: usize, dim: usize, layers: usize) -> Vec<(usize, usize)> {
    let input = |l: usize| if l == 0 { in_dim } else { dim };
    match arch {
        ArchKind::Gcn | ArchKind::Mlp => (0..layers).map(|l| (input(l), dim)).collect(),
        ArchKind::Sage => (0..layers).map(|l| (2 * input(l), dim)).collect(),
        ArchKind::Gin => (0..layers)
            .flat_map(|l| [(input(l), dim), (dim, dim)])
            .collect(),
        ArchKind::Sgc => vec![(in_dim, dim)],
    }
}

/// Weight shapes of the head: `fc - 1` hidden `dim × dim` layers then `dim × 2`.
pub fn head_shapes(dim: usize, fc: usize) -> Vec<(usize, usize)> {
    (0..fc)
        .map(|l| if l + 1 == fc { (dim, NUM_CLASSES) } else { (dim, dim) })
        .collect()
}

fn glorot(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor2 {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-limit..=limit))
        .collect();
    Tensor2::from_vec(rows, cols, data).expect("shape matches data")
}

/// Glorot-uniform weights, zero biases, gate `w = (0, 0)`. Deterministic per seed.
pub fn init_params(config: &ModelConfig, seed: u64) -> ModelParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let in_dim = config.feature.width();
    let branches = (0..config.graph_type.branch_count())
        .map(|_| BranchParams {
            weights: branch_shapes(config.arch, in_dim, config.dim, config.layers)
                .into_iter()
                .map(|(r, c)| glorot(r, c, &mut rng))
                .collect(),
        })
        .collect();
    let head = head_shapes(config.dim, config.fc)
        .into_iter()
        .map(|(r, c)| DenseParams {
            weight: glorot(r, c, &mut rng),
            bias: Tensor2::zeros(1, c),
        })
        .collect();
    ModelParams {
        branches,
        gate: GateParams { w: [0.0, 0.0] },
        head,
    }
}

impl ModelParams {
    /// Same structure, all zeros.
    pub fn zeros_like(&self) -> ModelParams {
        ModelParams {
            branches: self
                .branches
                .iter()
                .map(|b| BranchParams {
                    weights: b.weights.iter().map(|w| Tensor2::zeros(w.rows(), w.cols())).collect(),
                })
                .collect(),
            gate: GateParams { w: [0.0, 0.0] },
            head: self
                .head
                .iter()
                .map(|d| DenseParams {
                    weight: Tensor2::zeros(d.weight.rows(), d.weight.cols()),
                    bias: Tensor2::zeros(1, d.bias.cols()),
                })
                .collect(),
        }
    }

    /// Named parameter blocks with their shapes, in a fixed order.
    pub fn named(&self) -> Vec<(String, (usize, usize), &[f64])> {
        let mut out = Vec::new();
        for (b, branch) in self.branches.iter().enumerate() {
            for (l, w) in branch.weights.iter().enumerate() {
                out.push((format!("branch{b}.w{l}"), w.shape(), w.data()));
            }
        }
        out.push(("gate.w".to_string(), (1, 2), &self.gate.w[..]));
        for (l, d) in self.head.iter().enumerate() {
            out.push((format!("head{l}.weight"), d.weight.shape(), d.weight.data()));
            out.push((format!("head{l}.bias"), d.bias.shape(), d.bias.data()));
        }
        out
    }

    /// Mutable parameter blocks in the order of [`named`](Self::named).
    pub fn slots_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for branch in &mut self.branches {
            for w in &mut branch.weights {
                out.push(w.data_mut());
            }
        }
        out.push(&mut self.gate.w[..]);
        for d in &mut self.head {
            out.push(d.weight.data_mut());
            out.push(d.bias.data_mut());
        }
        out
    }

    pub fn slots(&self) -> Vec<&[f64]> {
        self.named().into_iter().map(|(_, _, v)| v).collect()
    }

    pub fn scalar_count(&self) -> usize {
        self.slots().iter().map(|s| s.len()).sum()
    }

    /// Elementwise `self += other`. Structures must match.
    pub fn add_assign(&mut self, other: &ModelParams) {
        let src = other.slots();
        for (dst, src) in self.slots_mut().into_iter().zip(src) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for slot in self.slots_mut() {
            slot.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.slots().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    /// Rebuilds parameters for `config` from named blocks, checking names and shapes.
    pub fn from_named(config: &ModelConfig, blocks: &[(String, Tensor2)]) -> Result<ModelParams> {
        let mut params = init_params(config, 0);
        let expected: Vec<(String, (usize, usize))> = params
            .named()
            .into_iter()
            .map(|(n, s, _)| (n, s))
            .collect();
        if expected.len() != blocks.len() {
            return Err(Error::validation(format!(
                "expected {} parameter blocks, found {}",
                expected.len(),
                blocks.len()
            )));
        }
        for ((name, shape), (got_name, t)) in expected.iter().zip(blocks) {
            if name != got_name || *shape != t.shape() {
                return Err(Error::validation(format!(
                    "parameter {got_name} {:?} does not match expected {name} {shape:?}",
                    t.shape()
                )));
            }
        }
        for (slot, (_, t)) in params.slots_mut().into_iter().zip(blocks) {
            slot.copy_from_slice(t.data());
        }
        Ok(params)
    }
}
