//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use dualgraph_core::config::{ArchKind, GraphType, ModelConfig};
use dualgraph_core::engine::{GraphClassifier, ModelParams, PreparedSample};
use dualgraph_core::graph::{merge_graphs, Graph, SamplePair};
use dualgraph_core::training::{cross_entropy_grad, cross_entropy_loss};
use dualgraph_core::{DetRng, FeatureMode, Label, Tensor2};
use rand::{Rng, SeedableRng};

pub type Mat = Vec<Vec<f64>>;

pub fn random_graph(rng: &mut DetRng, max_nodes: usize, max_edges: usize) -> Graph {
    let n = rng.random_range(1..=max_nodes);
    let m = rng.random_range(0..=max_edges);
    let edges = (0..m)
        .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
        .collect();
    Graph::new(n, edges).unwrap()
}

pub fn random_pair(rng: &mut DetRng, id: usize, max_nodes: usize, max_edges: usize) -> SamplePair {
    SamplePair {
        id: format!("s{id}"),
        label: if rng.random_bool(0.5) {
            Label::Malicious
        } else {
            Label::Benign
        },
        fcg: random_graph(rng, max_nodes, max_edges),
        pcg: random_graph(rng, max_nodes.min(4), max_edges.min(4)),
        entropy: rng.random_range(0.0..8.0),
    }
}

/// Symmetric 0/1 adjacency; a self-loop sets the diagonal entry.
pub fn dense_adjacency(g: &Graph) -> Mat {
    let n = g.node_count();
    let mut a = vec![vec![0.0; n]; n];
    for &(u, v) in g.edges() {
        a[u][v] = 1.0;
        a[v][u] = 1.0;
    }
    a
}

/// Local Degree Profile from the dense adjacency matrix.
pub fn dense_ldp(g: &Graph) -> Mat {
    let a = dense_adjacency(g);
    let n = a.len();
    let deg: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    (0..n)
        .map(|i| {
            let nb: Vec<f64> = (0..n).filter(|&j| a[i][j] == 1.0).map(|j| deg[j]).collect();
            if nb.is_empty() {
                return vec![deg[i], 0.0, 0.0, 0.0, 0.0];
            }
            let k = nb.len() as f64;
            let mean = nb.iter().sum::<f64>() / k;
            let var = nb.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / k;
            vec![
                deg[i],
                nb.iter().cloned().fold(f64::INFINITY, f64::min),
                nb.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                mean,
                var.sqrt(),
            ]
        })
        .collect()
}

/// Shannon entropy in bits per byte from a 256-bin histogram.
pub fn histogram_entropy(bytes: &[u8]) -> f64 {
    let mut hist = [0u64; 256];
    for &b in bytes {
        hist[b as usize] += 1;
    }
    let n = bytes.len() as f64;
    hist.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>()
        + 0.0
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let inner = b.len();
    let cols = if inner == 0 { 0 } else { b[0].len() };
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

pub fn relu(m: Mat) -> Mat {
    m.into_iter()
        .map(|r| r.into_iter().map(|v| v.max(0.0)).collect())
        .collect()
}

pub fn to_mat(t: &Tensor2) -> Mat {
    (0..t.rows()).map(|i| t.row(i).to_vec()).collect()
}

/// `A + I`.
pub fn a_tilde(g: &Graph) -> Mat {
    let mut a = dense_adjacency(g);
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += 1.0;
    }
    a
}

/// `D̃^{-1/2} (A + I) D̃^{-1/2}`.
pub fn a_hat(g: &Graph) -> Mat {
    let t = a_tilde(g);
    let d: Vec<f64> = t.iter().map(|r| r.iter().sum::<f64>()).collect();
    let n = t.len();
    (0..n)
        .map(|i| (0..n).map(|j| t[i][j] / (d[i] * d[j]).sqrt()).collect())
        .collect()
}

/// Row-normalized adjacency; isolated rows stay zero.
pub fn a_mean(g: &Graph) -> Mat {
    dense_adjacency(g)
        .into_iter()
        .map(|r| {
            let s: f64 = r.iter().sum();
            if s == 0.0 {
                r
            } else {
                r.into_iter().map(|v| v / s).collect()
            }
        })
        .collect()
}

/// Dense message passing through every layer of one branch.
pub fn dense_branch(arch: ArchKind, g: &Graph, x: &Mat, weights: &[Tensor2]) -> Mat {
    let w: Vec<Mat> = weights.iter().map(to_mat).collect();
    match arch {
        ArchKind::Gcn => w.iter().fold(x.clone(), |h, wl| relu(matmul(&matmul(&a_hat(g), &h), wl))),
        ArchKind::Mlp => w.iter().fold(x.clone(), |h, wl| relu(matmul(&h, wl))),
        ArchKind::Gin => w.chunks(2).fold(x.clone(), |h, wl| {
            relu(matmul(&relu(matmul(&matmul(&a_tilde(g), &h), &wl[0])), &wl[1]))
        }),
        ArchKind::Sage => w.iter().fold(x.clone(), |h, wl| {
            let m = matmul(&a_mean(g), &h);
            let cat: Mat = h.iter().zip(&m).map(|(a, b)| [a.clone(), b.clone()].concat()).collect();
            relu(matmul(&cat, wl))
        }),
        ArchKind::Sgc => unreachable!("SGC uses dense_sgc"),
    }
}

pub fn dense_sgc(g: &Graph, x: &Mat, k: usize, w: &Tensor2) -> Mat {
    let a = a_hat(g);
    let h = (0..k).fold(x.clone(), |h, _| matmul(&a, &h));
    matmul(&h, &to_mat(w))
}

pub fn mean_rows(m: &Mat) -> Vec<f64> {
    let n = m.len() as f64;
    (0..m[0].len()).map(|j| m.iter().map(|r| r[j]).sum::<f64>() / n).collect()
}

fn dense_features(g: &Graph, entropy: f64, mode: FeatureMode) -> Mat {
    let ldp = dense_ldp(g);
    ldp.into_iter()
        .map(|r| match mode {
            FeatureMode::Ldp => r,
            FeatureMode::Entropy => vec![entropy],
            FeatureMode::LdpEntropy => [r, vec![entropy]].concat(),
        })
        .collect()
}

/// Eval-mode class probabilities computed with dense matrices only.
pub fn dense_forward(config: &ModelConfig, params: &ModelParams, sample: &SamplePair) -> [f64; 2] {
    let graphs: Vec<Graph> = match config.graph_type {
        GraphType::Fcg => vec![sample.fcg.clone()],
        GraphType::Pcg => vec![sample.pcg.clone()],
        GraphType::Merged => vec![merge_graphs(&sample.fcg, &sample.pcg)],
        GraphType::Dual => vec![sample.fcg.clone(), sample.pcg.clone()],
    };
    let pooled: Vec<Vec<f64>> = graphs
        .iter()
        .zip(&params.branches)
        .map(|(g, b)| {
            let x = dense_features(g, sample.entropy, config.feature);
            let h = match config.arch {
                ArchKind::Sgc => dense_sgc(g, &x, config.layers, &b.weights[0]),
                arch => dense_branch(arch, g, &x, &b.weights),
            };
            mean_rows(&h)
        })
        .collect();
    let mut z = if pooled.len() == 2 {
        let w = params.gate.w;
        let m = w[0].max(w[1]);
        let (e0, e1) = ((w[0] - m).exp(), (w[1] - m).exp());
        let (a0, a1) = (e0 / (e0 + e1), e1 / (e0 + e1));
        pooled[0].iter().zip(&pooled[1]).map(|(x, y)| a0 * x + a1 * y).collect()
    } else {
        pooled[0].clone()
    };
    let last = params.head.len() - 1;
    for (l, layer) in params.head.iter().enumerate() {
        let mut out = matmul(&vec![z], &to_mat(&layer.weight)).remove(0);
        for (o, b) in out.iter_mut().zip(layer.bias.row(0)) {
            *o += b;
        }
        z = if l < last { out.into_iter().map(|v| v.max(0.0)).collect() } else { out };
    }
    let m = z[0].max(z[1]);
    let (e0, e1) = ((z[0] - m).exp(), (z[1] - m).exp());
    [e0 / (e0 + e1), e1 / (e0 + e1)]
}

/// Largest relative error between analytic and central-difference gradients
/// of the cross-entropy loss, over every scalar parameter.
///
/// With `dropout_seed` the head runs in training mode; the dropout generator
/// is reseeded before every pass so all passes share one mask.
pub fn gradient_check(
    model: &mut GraphClassifier,
    sample: &PreparedSample,
    dropout_seed: Option<u64>,
    step: f64,
) -> f64 {
    let label = sample.label.index();
    let loss_at = |m: &mut GraphClassifier| -> f64 {
        let mut rng = dropout_seed.map(DetRng::seed_from_u64);
        let probs = m.forward(sample, rng.as_mut()).unwrap();
        cross_entropy_loss(probs, label).unwrap()
    };
    let mut rng = dropout_seed.map(DetRng::seed_from_u64);
    let probs = model.forward(sample, rng.as_mut()).unwrap();
    let analytic = model.backward(cross_entropy_grad(probs, label)).unwrap();
    let analytic: Vec<Vec<f64>> = analytic.slots().iter().map(|s| s.to_vec()).collect();

    let base = model.params.clone();
    let mut worst: f64 = 0.0;
    for (s, slot) in analytic.iter().enumerate() {
        for (i, &a) in slot.iter().enumerate() {
            let mut plus = base.clone();
            plus.slots_mut()[s][i] += step;
            model.params = plus;
            let lp = loss_at(model);
            let mut minus = base.clone();
            minus.slots_mut()[s][i] -= step;
            model.params = minus;
            let lm = loss_at(model);
            let numeric = (lp - lm) / (2.0 * step);
            let scale = a.abs().max(numeric.abs()).max(GRAD_FLOOR);
            worst = worst.max((a - numeric).abs() / scale);
        }
    }
    model.params = base;
    worst
}

/// Moves head biases off zero so no hidden unit sits exactly on a ReLU kink
/// (zero-initialized biases with a dead branch put every unit there).
pub fn jitter_head_biases(model: &mut GraphClassifier, seed: u64) {
    let mut rng = DetRng::seed_from_u64(seed);
    for layer in &mut model.params.head {
        for b in layer.bias.data_mut() {
            *b = rng.random_range(-0.5..0.5);
        }
    }
}

/// Gradients smaller than this are compared in absolute terms.
pub const GRAD_FLOOR: f64 = 1e-6;

/// Micro-model sample: graphs of at most 6 nodes.
pub fn micro_sample(seed: u64) -> SamplePair {
    let mut rng = DetRng::seed_from_u64(seed);
    let fcg = Graph::new(6, vec![(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (0, 5), (5, 5)]).unwrap();
    let pcg = Graph::new(4, vec![(0, 1), (0, 2), (2, 3)]).unwrap();
    SamplePair {
        id: "micro".into(),
        label: if rng.random_bool(0.5) {
            Label::Malicious
        } else {
            Label::Benign
        },
        fcg,
        pcg,
        entropy: 0.5 + rng.random_range(0.0..1.0),
    }
}
