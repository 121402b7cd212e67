//! Dual-branch graph classifier: per-graph encoders, mean pooling, softmax
//! gate, fully connected head.

use std::sync::Arc;

use rand::Rng;

use super::layers::{layer_backward, layer_forward, weights_per_layer, LayerCache};
use super::ops::GraphOps;
use super::params::{BranchParams, ModelParams, NUM_CLASSES};
use crate::config::{ArchKind, GraphType, ModelConfig};
use crate::error::{Error, Result};
use crate::features::build_features;
use crate::graph::{merge_graphs, Graph, Label, SamplePair};
use crate::tensor::Tensor2;
use crate::DetRng;

/// A graph with its feature matrix and propagation operators.
#[derive(Debug, Clone)]
pub struct PreparedGraph {
    pub features: Tensor2,
    pub ops: Arc<GraphOps>,
}

impl PreparedGraph {
    pub fn new(graph: &Graph, features: Tensor2) -> Result<Self> {
        if features.rows() != graph.node_count() {
            return Err(Error::validation(format!(
                "feature matrix has {} rows for {} nodes",
                features.rows(),
                graph.node_count()
            )));
        }
        Ok(PreparedGraph {
            features,
            ops: Arc::new(GraphOps::new(graph)),
        })
    }
}

/// Model-ready inputs of one sample: one graph per branch.
#[derive(Debug, Clone)]
pub struct PreparedSample {
    pub label: Label,
    pub graphs: Vec<PreparedGraph>,
}

impl PreparedSample {
    /// Selects the graphs `config.graph_type` needs and builds their features.
    pub fn new(sample: &SamplePair, config: &ModelConfig) -> Result<Self> {
        let graphs: Vec<Graph> = match config.graph_type {
            GraphType::Fcg => vec![sample.fcg.clone()],
            GraphType::Pcg => vec![sample.pcg.clone()],
            GraphType::Merged => vec![merge_graphs(&sample.fcg, &sample.pcg)],
            GraphType::Dual => vec![sample.fcg.clone(), sample.pcg.clone()],
        };
        let graphs = graphs
            .iter()
            .map(|g| PreparedGraph::new(g, build_features(g, sample.entropy, config.feature)?))
            .collect::<Result<_>>()?;
        Ok(PreparedSample {
            label: sample.label,
            graphs,
        })
    }
}

#[derive(Debug, Clone)]
struct BranchCache {
    ops: Arc<GraphOps>,
    layers: Vec<LayerCache>,
    /// `Â^K X` when the branch is SGC.
    sgc_propagated: Option<Tensor2>,
    nodes: usize,
    pooled: Vec<f64>,
}

#[derive(Debug, Clone)]
struct HeadCache {
    /// Input to every head layer.
    inputs: Vec<Tensor2>,
    /// Pre-activations of the hidden layers.
    pre: Vec<Tensor2>,
    /// Inverted-dropout multipliers of the hidden layers (`None` at eval).
    masks: Vec<Option<Vec<f64>>>,
}

#[derive(Debug, Clone)]
struct ForwardCache {
    branches: Vec<BranchCache>,
    alpha: [f64; 2],
    head: HeadCache,
    probs: [f64; 2],
}

/// Model state: parameters plus the activations of the last training forward pass.
#[derive(Debug, Clone)]
pub struct GraphClassifier {
    config: ModelConfig,
    pub params: ModelParams,
    cache: Option<ForwardCache>,
}

impl GraphClassifier {
    pub fn new(config: ModelConfig, params: ModelParams) -> Result<Self> {
        config.validate()?;
        let expected = super::init_params(&config, 0);
        let shapes = |p: &ModelParams| -> Vec<(String, (usize, usize))> {
            p.named().into_iter().map(|(n, s, _)| (n, s)).collect()
        };
        if shapes(&expected) != shapes(&params) {
            return Err(Error::validation(
                "parameter shapes do not match the model configuration",
            ));
        }
        Ok(GraphClassifier {
            config,
            params,
            cache: None,
        })
    }

    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        let params = super::init_params(&config, seed);
        Self::new(config, params)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Evaluation-mode class probabilities (dropout off); leaves no cache.
    pub fn predict(&self, sample: &PreparedSample) -> Result<[f64; 2]> {
        forward_impl(&self.config, &self.params, sample, None).map(|(p, _)| p)
    }

    /// Forward pass that keeps activations for [`backward`](Self::backward).
    ///
    /// With `dropout_rng` the head applies inverted dropout; without it the
    /// pass is deterministic.
    pub fn forward(
        &mut self,
        sample: &PreparedSample,
        dropout_rng: Option<&mut DetRng>,
    ) -> Result<[f64; 2]> {
        let (probs, cache) = forward_impl(&self.config, &self.params, sample, dropout_rng)?;
        self.cache = Some(cache);
        Ok(probs)
    }

    /// Gradients of every parameter given `∂L/∂probs` for the last forward pass.
    pub fn backward(&mut self, grad_probs: [f64; 2]) -> Result<ModelParams> {
        let cache = self.cache.take().ok_or(Error::NoForwardCache)?;
        Ok(backward_impl(&self.config, &self.params, &cache, grad_probs))
    }
}

fn softmax2(logits: &[f64]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let s = e0 + e1;
    [e0 / s, e1 / s]
}

fn branch_forward(
    arch: ArchKind,
    params: &BranchParams,
    graph: &PreparedGraph,
    layers: usize,
) -> Result<(Vec<f64>, BranchCache)> {
    let mut caches = Vec::with_capacity(layers);
    let per = weights_per_layer(arch);
    let mut hidden: Option<Tensor2> = None;
    for l in 0..layers {
        let weights = &params.weights[l * per..(l + 1) * per];
        let input = hidden.as_ref().unwrap_or(&graph.features);
        let (out, cache) = layer_forward(arch, &graph.ops, input, weights, l)?;
        caches.push(cache);
        hidden = Some(out);
    }
    let mut h = hidden.expect("at least one layer");
    let mut sgc_propagated = None;
    if arch == ArchKind::Sgc {
        let w = &params.weights[0];
        if w.rows() != h.cols() {
            return Err(Error::validation(format!(
                "layer {layers}: SGC projection has {} rows, expected {}",
                w.rows(),
                h.cols()
            )));
        }
        let projected = h.matmul(w);
        sgc_propagated = Some(h);
        h = projected;
    }
    let pooled = super::layers::global_pool(&h)?;
    Ok((
        pooled.clone(),
        BranchCache {
            ops: Arc::clone(&graph.ops),
            layers: caches,
            sgc_propagated,
            nodes: h.rows(),
            pooled,
        },
    ))
}

fn forward_impl(
    config: &ModelConfig,
    params: &ModelParams,
    sample: &PreparedSample,
    mut dropout_rng: Option<&mut DetRng>,
) -> Result<([f64; 2], ForwardCache)> {
    let branches = config.graph_type.branch_count();
    if sample.graphs.len() != branches || params.branches.len() != branches {
        return Err(Error::validation(format!(
            "{} config needs {branches} graph(s); sample has {}, params have {}",
            config.graph_type,
            sample.graphs.len(),
            params.branches.len()
        )));
    }
    for g in &sample.graphs {
        if g.features.cols() != config.feature.width() {
            return Err(Error::validation(format!(
                "feature width {} does not match {} (width {})",
                g.features.cols(),
                config.feature,
                config.feature.width()
            )));
        }
    }

    let mut branch_caches = Vec::with_capacity(branches);
    for (bp, graph) in params.branches.iter().zip(&sample.graphs) {
        let (_, cache) = branch_forward(config.arch, bp, graph, config.layers)?;
        branch_caches.push(cache);
    }

    let (fused, alpha) = if branches == 2 {
        let alpha = params.gate.alpha();
        let fused = super::layers::gated_fusion(
            &branch_caches[0].pooled,
            &branch_caches[1].pooled,
            &params.gate,
        )?;
        (fused, alpha)
    } else {
        // gate bypassed
        (branch_caches[0].pooled.clone(), [1.0, 0.0])
    };

    let keep = 1.0 - config.dropout;
    let mut head = HeadCache {
        inputs: Vec::with_capacity(params.head.len()),
        pre: Vec::with_capacity(params.head.len()),
        masks: Vec::with_capacity(params.head.len()),
    };
    let mut a = Tensor2::from_vec(1, fused.len(), fused)?;
    let last = params.head.len() - 1;
    for (l, dense) in params.head.iter().enumerate() {
        let mut z = a.matmul(&dense.weight);
        z.add_assign(&dense.bias);
        head.inputs.push(a);
        if l == last {
            a = z;
            break;
        }
        let mut h = z.relu();
        let mask = match dropout_rng.as_deref_mut() {
            Some(rng) if config.dropout > 0.0 => {
                let m: Vec<f64> = (0..h.cols())
                    .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                    .collect();
                for (v, s) in h.data_mut().iter_mut().zip(&m) {
                    *v *= s;
                }
                Some(m)
            }
            _ => None,
        };
        head.pre.push(z);
        head.masks.push(mask);
        a = h;
    }
    let probs = softmax2(a.data());
    if !probs.iter().all(|p| p.is_finite()) {
        return Err(Error::validation("non-finite output probabilities"));
    }
    Ok((
        probs,
        ForwardCache {
            branches: branch_caches,
            alpha,
            head,
            probs,
        },
    ))
}

fn backward_impl(
    config: &ModelConfig,
    params: &ModelParams,
    cache: &ForwardCache,
    grad_probs: [f64; 2],
) -> ModelParams {
    let mut grads = params.zeros_like();
    let p = cache.probs;
    let dot = grad_probs[0] * p[0] + grad_probs[1] * p[1];
    let grad_logits: Vec<f64> = (0..NUM_CLASSES).map(|k| p[k] * (grad_probs[k] - dot)).collect();
    let mut grad = Tensor2::from_vec(1, NUM_CLASSES, grad_logits).expect("two logits");

    for l in (0..params.head.len()).rev() {
        let dense = &params.head[l];
        if l < params.head.len() - 1 {
            if let Some(mask) = &cache.head.masks[l] {
                for (g, s) in grad.data_mut().iter_mut().zip(mask) {
                    *g *= s;
                }
            }
            grad.relu_backward(&cache.head.pre[l]);
        }
        grads.head[l].weight.add_assign(&cache.head.inputs[l].t_matmul(&grad));
        grads.head[l].bias.add_assign(&grad);
        grad = grad.matmul_t(&dense.weight);
    }
    let grad_fused = grad.into_vec();

    let branch_grads: Vec<Vec<f64>> = if params.branches.len() == 2 {
        let alpha = cache.alpha;
        let g1 = &cache.branches[0].pooled;
        let g2 = &cache.branches[1].pooled;
        let d_alpha = [
            grad_fused.iter().zip(g1).map(|(d, g)| d * g).sum::<f64>(),
            grad_fused.iter().zip(g2).map(|(d, g)| d * g).sum::<f64>(),
        ];
        let mix = alpha[0] * d_alpha[0] + alpha[1] * d_alpha[1];
        grads.gate.w = [alpha[0] * (d_alpha[0] - mix), alpha[1] * (d_alpha[1] - mix)];
        vec![
            grad_fused.iter().map(|d| alpha[0] * d).collect(),
            grad_fused.iter().map(|d| alpha[1] * d).collect(),
        ]
    } else {
        vec![grad_fused]
    };

    let per = weights_per_layer(config.arch);
    for (b, grad_pooled) in branch_grads.into_iter().enumerate() {
        let bc = &cache.branches[b];
        let graph_ops = &*bc.ops;
        let weights = &params.branches[b].weights;
        let wgrads = &mut grads.branches[b].weights;

        // mean pooling spreads the gradient evenly over nodes
        let inv = 1.0 / bc.nodes as f64;
        let row: Vec<f64> = grad_pooled.iter().map(|g| g * inv).collect();
        let mut grad_h = Tensor2::zeros(bc.nodes, row.len());
        for r in 0..bc.nodes {
            grad_h.row_mut(r).copy_from_slice(&row);
        }

        if let Some(propagated) = &bc.sgc_propagated {
            // inputs are constants, so the propagation steps need no gradient
            wgrads[0].add_assign(&propagated.t_matmul(&grad_h));
            continue;
        }
        for l in (0..bc.layers.len()).rev() {
            let span = l * per..(l + 1) * per;
            let next = layer_backward(
                &bc.layers[l],
                graph_ops,
                &weights[span.clone()],
                grad_h,
                &mut wgrads[span],
                l > 0,
            );
            match next {
                Some(g) => grad_h = g,
                None => break,
            }
        }
    }
    grads
}
