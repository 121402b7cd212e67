//! F1 metric, stratified k-fold cross-validation, grid execution and
//! per-configuration aggregation.

mod results;

pub use results::{
    format_fold_csv, format_summary_csv, parse_fold_csv, parse_summary_csv, FoldRow, SummaryRow,
    FOLD_HEADER, SUMMARY_HEADER,
};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rayon::prelude::*;

use crate::config::{ArchKind, GraphType, ModelConfig, SchedulerKind, TrainConfig};
use crate::error::{Error, Result};
use crate::features::FeatureMode;
use crate::graph::{Dataset, Label};
use crate::training::{train_split, EpochRecord};
use crate::{derive_seed, DetRng};

pub const DEFAULT_FOLDS: usize = 5;

/// F1 with the malicious class as positive; 0 when precision + recall is 0.
pub fn f1_score(predictions: &[Label], labels: &[Label]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::validation(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::validation("F1 of an empty set is undefined"));
    }
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&p, &y) in predictions.iter().zip(labels) {
        match (p, y) {
            (Label::Malicious, Label::Malicious) => tp += 1,
            (Label::Malicious, Label::Benign) => fp += 1,
            (Label::Benign, Label::Malicious) => fneg += 1,
            (Label::Benign, Label::Benign) => {}
        }
    }
    // 2PR/(P+R) == 2TP/(2TP+FP+FN), and is 0 exactly when TP = 0
    if tp == 0 {
        return Ok(0.0);
    }
    Ok(2.0 * tp as f64 / (2 * tp + fp + fneg) as f64)
}

/// Partitions sample indices into `k` stratified folds.
///
/// Each class is shuffled and dealt round-robin; the dealing position carries
/// over from one class to the next so fold sizes differ by at most one.
pub fn stratified_folds(labels: &[Label], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::validation("need at least 2 folds"));
    }
    let mut rng = DetRng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut cursor = 0;
    for class in [Label::Benign, Label::Malicious] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < k {
            return Err(Error::validation(format!(
                "class {class} has {} samples; need at least {k} for {k}-fold CV",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for i in idx {
            folds[cursor].push(i);
            cursor = (cursor + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub config: ModelConfig,
    pub fold_f1: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation across folds.
    pub std: f64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

/// Mean, sample std, min, median and max of fold scores.
pub fn aggregate(scores: &[f64]) -> Result<(f64, f64, f64, f64, f64)> {
    if scores.is_empty() {
        return Err(Error::validation("no fold scores to aggregate"));
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let std = if scores.len() > 1 {
        (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    };
    Ok((mean, std, sorted[0], median, sorted[sorted.len() - 1]))
}

impl RunSummary {
    pub fn from_scores(config: ModelConfig, fold_f1: Vec<f64>) -> Result<Self> {
        let (mean, std, min, median, max) = aggregate(&fold_f1)?;
        Ok(RunSummary {
            config,
            fold_f1,
            mean,
            std,
            min,
            median,
            max,
        })
    }
}

#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub summary: RunSummary,
    /// Epoch trace of each fold's run, with the config (and seed) used.
    pub fold_runs: Vec<(ModelConfig, Vec<EpochRecord>)>,
}

/// Trains on every k−1 folds and scores best-epoch F1 on the held-out fold.
///
/// Folds depend only on `seed` and the labels, so every configuration run
/// with the same seed sees the same folds.
pub fn cross_validate(dataset: &Dataset, config: &ModelConfig, seed: u64, k: usize) -> Result<CvOutcome> {
    config.validate()?;
    let folds = stratified_folds(&dataset.labels(), k, seed)?;
    let runs: Vec<Result<(f64, ModelConfig, Vec<EpochRecord>)>> = (0..k)
        .into_par_iter()
        .map(|f| {
            let train_idx: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, idx)| idx.iter().copied())
                .collect();
            let mut fold_cfg = config.clone();
            fold_cfg.train.seed = derive_seed(seed, 1 + f as u64);
            let outcome = train_split(dataset, &train_idx, &folds[f], &fold_cfg)?;
            Ok((outcome.best_val_f1, fold_cfg, outcome.records))
        })
        .collect();
    let mut scores = Vec::with_capacity(k);
    let mut fold_runs = Vec::with_capacity(k);
    for r in runs {
        let (f1, cfg, records) = r?;
        scores.push(f1);
        fold_runs.push((cfg, records));
    }
    let mut summary_cfg = config.clone();
    summary_cfg.train.seed = seed;
    Ok(CvOutcome {
        summary: RunSummary::from_scores(summary_cfg, scores)?,
        fold_runs,
    })
}

/// Declared value lists; the grid is their cross product.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub graph_types: Vec<GraphType>,
    pub features: Vec<FeatureMode>,
    pub archs: Vec<ArchKind>,
    pub layers: Vec<usize>,
    pub fcs: Vec<usize>,
    pub dims: Vec<usize>,
    pub schedulers: Vec<SchedulerKind>,
    pub dropout: f64,
    pub train: TrainConfig,
}

impl GridSpec {
    pub fn cells(&self) -> Vec<ModelConfig> {
        let mut out = Vec::new();
        for &graph_type in &self.graph_types {
            for &feature in &self.features {
                for &arch in &self.archs {
                    for &layers in &self.layers {
                        for &fc in &self.fcs {
                            for &dim in &self.dims {
                                for &scheduler in &self.schedulers {
                                    let mut c = ModelConfig::new(
                                        graph_type, feature, arch, layers, fc, dim, scheduler,
                                    );
                                    c.dropout = self.dropout;
                                    c.train = self.train.clone();
                                    out.push(c);
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Cross-validates every grid cell with shared folds; sorted by mean F1,
/// descending (grid order breaks ties).
pub fn run_grid(dataset: &Dataset, grid: &GridSpec, seed: u64, k: usize) -> Result<Vec<CvOutcome>> {
    let cells = grid.cells();
    if cells.is_empty() {
        return Err(Error::validation("grid has no cells"));
    }
    let mut outcomes = cells
        .par_iter()
        .map(|c| cross_validate(dataset, c, seed, k))
        .collect::<Result<Vec<_>>>()?;
    sort_by_mean(&mut outcomes);
    Ok(outcomes)
}

pub fn sort_by_mean(outcomes: &mut [CvOutcome]) {
    outcomes.sort_by(|a, b| b.summary.mean.total_cmp(&a.summary.mean));
}
