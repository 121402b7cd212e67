//! Loss, optimizer, learning-rate schedules and the training loop.

mod adam;
mod schedule;

pub use adam::Adam;
pub use schedule::{one_cycle_lr, one_cycle_peak, PlateauScheduler};

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;

use crate::config::{ModelConfig, SchedulerKind};
use crate::engine::{GraphClassifier, ModelParams, PreparedSample};
use crate::error::{Error, Result};
use crate::evaluation::f1_score;
use crate::graph::{Dataset, Label};
use crate::{derive_seed, DetRng};

const PROB_FLOOR: f64 = 1e-12;

/// `-ln(probs[label])` with the probability clamped to at least 1e-12.
pub fn cross_entropy_loss(probs: [f64; 2], label: usize) -> Result<f64> {
    if label > 1 {
        return Err(Error::validation("label must be 0 or 1"));
    }
    Ok(-probs[label].max(PROB_FLOOR).ln())
}

/// Gradient of [`cross_entropy_loss`] with respect to `probs`.
pub fn cross_entropy_grad(probs: [f64; 2], label: usize) -> [f64; 2] {
    let mut g = [0.0; 2];
    if probs[label] > PROB_FLOOR {
        g[label] = -1.0 / probs[label];
    }
    g
}

/// Predicted label: malicious when its probability is strictly larger.
pub fn predicted_label(probs: [f64; 2]) -> Label {
    if probs[1] > probs[0] {
        Label::Malicious
    } else {
        Label::Benign
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training loss over the epoch (dropout active).
    pub loss: f64,
    pub val_f1: f64,
    /// Learning rate used by the epoch's last optimizer step.
    pub lr: f64,
    pub train_f1: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the highest validation F1 (earliest on ties).
    pub best_params: ModelParams,
    pub best_epoch: usize,
    pub best_val_f1: f64,
    pub records: Vec<EpochRecord>,
}

/// F1 of eval-mode predictions over `samples`.
pub fn evaluate_f1(model: &GraphClassifier, samples: &[PreparedSample]) -> Result<f64> {
    let mut preds = Vec::with_capacity(samples.len());
    let mut labels = Vec::with_capacity(samples.len());
    for s in samples {
        preds.push(predicted_label(model.predict(s)?));
        labels.push(s.label);
    }
    f1_score(&preds, &labels)
}

/// Prepares model inputs for the given sample indices.
pub fn prepare_samples(
    dataset: &Dataset,
    indices: &[usize],
    config: &ModelConfig,
) -> Result<Vec<PreparedSample>> {
    indices
        .iter()
        .map(|&i| PreparedSample::new(&dataset.samples[i], config))
        .collect()
}

/// Trains on `train_idx`, selecting the epoch by F1 on `val_idx`.
pub fn train_split(
    dataset: &Dataset,
    train_idx: &[usize],
    val_idx: &[usize],
    config: &ModelConfig,
) -> Result<TrainOutcome> {
    let train_set: std::collections::HashSet<usize> = train_idx.iter().copied().collect();
    if val_idx.iter().any(|i| train_set.contains(i)) {
        return Err(Error::validation("train and validation splits overlap"));
    }
    let train = prepare_samples(dataset, train_idx, config)?;
    let val = prepare_samples(dataset, val_idx, config)?;
    train_run(&train, &val, config)
}

pub fn train_run(
    train: &[PreparedSample],
    val: &[PreparedSample],
    config: &ModelConfig,
) -> Result<TrainOutcome> {
    train_run_observed(train, val, config, |_| {})
}

/// [`train_run`] that calls `after_step` with the parameters after every optimizer step.
pub fn train_run_observed(
    train: &[PreparedSample],
    val: &[PreparedSample],
    config: &ModelConfig,
    mut after_step: impl FnMut(&ModelParams),
) -> Result<TrainOutcome> {
    config.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::validation("training and validation splits must be non-empty"));
    }
    let tc = &config.train;
    let mut model = GraphClassifier::init(config.clone(), derive_seed(tc.seed, 0))?;
    let mut shuffle_rng = DetRng::seed_from_u64(derive_seed(tc.seed, 1));
    let mut dropout_rng = DetRng::seed_from_u64(derive_seed(tc.seed, 2));
    let mut adam = Adam::new(&model.params);

    let steps_per_epoch = train.len().div_ceil(tc.batch_size);
    let total_steps = steps_per_epoch * tc.epochs;
    let mut plateau = PlateauScheduler::new(tc.base_lr, tc.plateau);

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut records = Vec::with_capacity(tc.epochs);
    let mut best: Option<(usize, f64, ModelParams)> = None;
    let mut step = 0usize;

    for epoch in 0..tc.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut lr = plateau.lr();
        for batch in order.chunks(tc.batch_size) {
            let mut grads = model.params.zeros_like();
            for &i in batch {
                let sample = &train[i];
                let probs = model.forward(sample, Some(&mut dropout_rng))?;
                let label = sample.label.index();
                loss_sum += cross_entropy_loss(probs, label)?;
                grads.add_assign(&model.backward(cross_entropy_grad(probs, label))?);
            }
            grads.scale(1.0 / batch.len() as f64);
            lr = match config.scheduler {
                SchedulerKind::OneCycle => one_cycle_lr(step, total_steps, tc.base_lr, &tc.one_cycle)?,
                SchedulerKind::Plateau => plateau.lr(),
            };
            adam.step(&mut model.params, &grads, lr);
            step += 1;
            after_step(&model.params);
        }
        if !model.params.all_finite() {
            return Err(Error::validation(format!("parameters diverged at epoch {epoch}")));
        }

        let val_f1 = evaluate_f1(&model, val)?;
        let train_f1 = if tc.track_train_f1 {
            Some(evaluate_f1(&model, train)?)
        } else {
            None
        };
        if config.scheduler == SchedulerKind::Plateau {
            plateau.observe(val_f1);
        }
        records.push(EpochRecord {
            epoch,
            loss: loss_sum / train.len() as f64,
            val_f1,
            lr,
            train_f1,
        });
        if best.as_ref().is_none_or(|(_, f1, _)| val_f1 > *f1) {
            best = Some((epoch, val_f1, model.params.clone()));
        }
    }

    let (best_epoch, best_val_f1, best_params) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        best_params,
        best_epoch,
        best_val_f1,
        records,
    })
}

/// Per-run CSV log: metadata comment lines then `epoch,loss,val_f1,lr`, plus
/// a `train_f1` column when it was tracked.
pub fn format_run_log(config: &ModelConfig, records: &[EpochRecord]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# fingerprint={} seed={}",
        config.fingerprint(),
        config.train.seed
    );
    let _ = writeln!(out, "# {}", config.describe());
    let tracked = records.iter().any(|r| r.train_f1.is_some());
    out.push_str(if tracked {
        "epoch,loss,val_f1,lr,train_f1\n"
    } else {
        "epoch,loss,val_f1,lr\n"
    });
    for r in records {
        let _ = write!(out, "{},{},{},{}", r.epoch, r.loss, r.val_f1, r.lr);
        if let (true, Some(t)) = (tracked, r.train_f1) {
            let _ = write!(out, ",{t}");
        }
        out.push('\n');
    }
    out
}

pub fn write_run_log(path: &Path, config: &ModelConfig, records: &[EpochRecord]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, format_run_log(config, records)).map_err(|e| Error::io(path, e))
}
