//! Message-passing layers and their reverse-mode gradients.
//!
//! All rules act on the symmetrized graph with self-loops `Ã = A_sym + I`:
//!
//! ```text
//! GCN   H' = ReLU(Â H W)               Â = D̃^{-1/2} Ã D̃^{-1/2}
//! SGC   H' = Â H                       (K steps, then one linear map)
//! GIN   H' = ReLU(ReLU(Ã H W₁) W₂)     (ε = 0)
//! SAGE  H' = ReLU([H ‖ mean_N(v) H] W)
//! MLP   H' = ReLU(H W)                 (edges ignored)
//! ```

use super::ops::GraphOps;
use crate::config::ArchKind;
use crate::error::{Error, Result};
use crate::tensor::Tensor2;

/// Activations kept from the forward pass of one layer.
#[derive(Debug, Clone)]
pub(crate) enum LayerCache {
    Gcn { propagated: Tensor2, pre: Tensor2 },
    Sage { concat: Tensor2, pre: Tensor2 },
    Gin { summed: Tensor2, pre1: Tensor2, hidden: Tensor2, pre2: Tensor2 },
    Mlp { input: Tensor2, pre: Tensor2 },
    /// SGC steps are linear and weight-free; nothing to keep.
    Sgc,
}

fn check_rows(layer: usize, what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::validation(format!(
            "layer {layer}: {what} has {got} rows, expected {want}"
        )));
    }
    Ok(())
}

/// Number of weight matrices one layer of `arch` consumes.
pub fn weights_per_layer(arch: ArchKind) -> usize {
    match arch {
        ArchKind::Gin => 2,
        ArchKind::Sgc => 0,
        _ => 1,
    }
}

/// One propagation step. `weights` holds this layer's matrices (none for SGC).
pub fn propagate(
    arch: ArchKind,
    ops: &GraphOps,
    h: &Tensor2,
    weights: &[Tensor2],
    layer: usize,
) -> Result<Tensor2> {
    layer_forward(arch, ops, h, weights, layer).map(|(out, _)| out)
}

pub(crate) fn layer_forward(
    arch: ArchKind,
    ops: &GraphOps,
    h: &Tensor2,
    weights: &[Tensor2],
    layer: usize,
) -> Result<(Tensor2, LayerCache)> {
    if h.rows() != ops.node_count() {
        return Err(Error::validation(format!(
            "layer {layer}: features have {} rows for a graph of {} nodes",
            h.rows(),
            ops.node_count()
        )));
    }
    if weights.len() != weights_per_layer(arch) {
        return Err(Error::validation(format!(
            "layer {layer}: {arch} expects {} weight matrices, got {}",
            weights_per_layer(arch),
            weights.len()
        )));
    }
    match arch {
        ArchKind::Gcn => {
            let w = &weights[0];
            check_rows(layer, "weight", w.rows(), h.cols())?;
            let propagated = ops.normalized.apply(h);
            let pre = propagated.matmul(w);
            Ok((pre.relu(), LayerCache::Gcn { propagated, pre }))
        }
        ArchKind::Sgc => {
            Ok((ops.normalized.apply(h), LayerCache::Sgc))
        }
        ArchKind::Gin => {
            let (w1, w2) = (&weights[0], &weights[1]);
            check_rows(layer, "weight 1", w1.rows(), h.cols())?;
            check_rows(layer, "weight 2", w2.rows(), w1.cols())?;
            let summed = ops.sum.apply(h);
            let pre1 = summed.matmul(w1);
            let hidden = pre1.relu();
            let pre2 = hidden.matmul(w2);
            Ok((
                pre2.relu(),
                LayerCache::Gin {
                    summed,
                    pre1,
                    hidden,
                    pre2,
                },
            ))
        }
        ArchKind::Sage => {
            let w = &weights[0];
            check_rows(layer, "weight", w.rows(), 2 * h.cols())?;
            let concat = h.hcat(&ops.mean.apply(h));
            let pre = concat.matmul(w);
            Ok((pre.relu(), LayerCache::Sage { concat, pre }))
        }
        ArchKind::Mlp => {
            let w = &weights[0];
            check_rows(layer, "weight", w.rows(), h.cols())?;
            let pre = h.matmul(w);
            Ok((
                pre.relu(),
                LayerCache::Mlp {
                    input: h.clone(),
                    pre,
                },
            ))
        }
    }
}

/// Reverse pass of one layer. Writes weight gradients into `weight_grads`
/// and returns the gradient with respect to the layer input when asked.
pub(crate) fn layer_backward(
    cache: &LayerCache,
    ops: &GraphOps,
    weights: &[Tensor2],
    mut grad_out: Tensor2,
    weight_grads: &mut [Tensor2],
    need_input_grad: bool,
) -> Option<Tensor2> {
    match cache {
        LayerCache::Gcn { propagated, pre } => {
            grad_out.relu_backward(pre);
            weight_grads[0].add_assign(&propagated.t_matmul(&grad_out));
            need_input_grad
                .then(|| ops.normalized.apply_transpose(&grad_out.matmul_t(&weights[0])))
        }
        LayerCache::Sgc => {
            need_input_grad.then(|| ops.normalized.apply_transpose(&grad_out))
        }
        LayerCache::Gin {
            summed,
            pre1,
            hidden,
            pre2,
        } => {
            grad_out.relu_backward(pre2);
            weight_grads[1].add_assign(&hidden.t_matmul(&grad_out));
            let mut grad_hidden = grad_out.matmul_t(&weights[1]);
            grad_hidden.relu_backward(pre1);
            weight_grads[0].add_assign(&summed.t_matmul(&grad_hidden));
            need_input_grad.then(|| ops.sum.apply_transpose(&grad_hidden.matmul_t(&weights[0])))
        }
        LayerCache::Sage { concat, pre } => {
            grad_out.relu_backward(pre);
            weight_grads[0].add_assign(&concat.t_matmul(&grad_out));
            need_input_grad.then(|| {
                let grad_concat = grad_out.matmul_t(&weights[0]);
                let half = grad_concat.cols() / 2;
                let mut grad_in = grad_concat.columns(0, half);
                grad_in.add_assign(&ops.mean.apply_transpose(&grad_concat.columns(half, 2 * half)));
                grad_in
            })
        }
        LayerCache::Mlp { input, pre } => {
            grad_out.relu_backward(pre);
            weight_grads[0].add_assign(&input.t_matmul(&grad_out));
            need_input_grad.then(|| grad_out.matmul_t(&weights[0]))
        }
    }
}

/// Column-wise mean over nodes.
pub fn global_pool(h: &Tensor2) -> Result<Vec<f64>> {
    if h.rows() == 0 {
        return Err(Error::validation("cannot pool an empty node set"));
    }
    Ok(h.column_mean())
}

/// `α₁ g₁ + α₂ g₂` with `α = softmax(w)`.
pub fn gated_fusion(g1: &[f64], g2: &[f64], gate: &super::GateParams) -> Result<Vec<f64>> {
    if g1.len() != g2.len() {
        return Err(Error::validation(format!(
            "cannot fuse embeddings of length {} and {}",
            g1.len(),
            g2.len()
        )));
    }
    let [a1, a2] = gate.alpha();
    Ok(g1.iter().zip(g2).map(|(x, y)| a1 * x + a2 * y).collect())
}
