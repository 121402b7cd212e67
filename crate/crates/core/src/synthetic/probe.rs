//! Logistic-regression probe on mean-pooled LDP features, used to check how
//! much class signal each modality carries.

use crate::error::Result;
use crate::evaluation::stratified_folds;
use crate::features::local_degree_profile;
use crate::graph::{Dataset, Graph, Label};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeInput {
    Fcg,
    Pcg,
    Both,
}

fn pooled_ldp(g: &Graph) -> Vec<f64> {
    local_degree_profile(g).column_mean()
}

fn probe_features(dataset: &Dataset, input: ProbeInput) -> Vec<Vec<f64>> {
    dataset
        .samples
        .iter()
        .map(|s| match input {
            ProbeInput::Fcg => pooled_ldp(&s.fcg),
            ProbeInput::Pcg => pooled_ldp(&s.pcg),
            ProbeInput::Both => {
                let mut v = pooled_ldp(&s.fcg);
                v.extend(pooled_ldp(&s.pcg));
                v
            }
        })
        .collect()
}

struct Logistic {
    mean: Vec<f64>,
    scale: Vec<f64>,
    w: Vec<f64>,
    b: f64,
}

impl Logistic {
    fn fit(x: &[&[f64]], y: &[f64]) -> Self {
        let d = x[0].len();
        let n = x.len() as f64;
        let mean: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let scale: Vec<f64> = (0..d)
            .map(|j| {
                let var = x.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let z: Vec<Vec<f64>> = x
            .iter()
            .map(|r| (0..d).map(|j| (r[j] - mean[j]) / scale[j]).collect())
            .collect();
        let (mut w, mut b) = (vec![0.0; d], 0.0);
        const LR: f64 = 0.5;
        const L2: f64 = 1e-3;
        for _ in 0..2000 {
            let mut gw = vec![0.0; d];
            let mut gb = 0.0;
            for (zi, &yi) in z.iter().zip(y) {
                let err = sigmoid(dot(&w, zi) + b) - yi;
                for j in 0..d {
                    gw[j] += err * zi[j];
                }
                gb += err;
            }
            for j in 0..d {
                w[j] -= LR * (gw[j] / n + L2 * w[j]);
            }
            b -= LR * gb / n;
        }
        Logistic { mean, scale, w, b }
    }

    fn predict(&self, x: &[f64]) -> bool {
        let z: Vec<f64> = (0..x.len()).map(|j| (x[j] - self.mean[j]) / self.scale[j]).collect();
        dot(&self.w, &z) + self.b > 0.0
    }
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// k-fold cross-validated accuracy of a logistic probe on the chosen modality.
pub fn probe_accuracy(dataset: &Dataset, input: ProbeInput, k: usize, seed: u64) -> Result<f64> {
    let labels = dataset.labels();
    let feats = probe_features(dataset, input);
    let folds = stratified_folds(&labels, k, seed)?;
    let mut correct = 0usize;
    for (f, test) in folds.iter().enumerate() {
        let train: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(g, _)| *g != f)
            .flat_map(|(_, idx)| idx.iter().copied())
            .collect();
        let x: Vec<&[f64]> = train.iter().map(|&i| feats[i].as_slice()).collect();
        let y: Vec<f64> = train
            .iter()
            .map(|&i| if labels[i] == Label::Malicious { 1.0 } else { 0.0 })
            .collect();
        let model = Logistic::fit(&x, &y);
        correct += test
            .iter()
            .filter(|&&i| model.predict(&feats[i]) == (labels[i] == Label::Malicious))
            .count();
    }
    Ok(correct as f64 / dataset.len() as f64)
}
