use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dualgraph_core::config::{ConfigKey, ModelConfig, TrainConfig};
use dualgraph_core::engine::save_checkpoint;
use dualgraph_core::evaluation::{
    cross_validate, format_fold_csv, format_summary_csv, parse_fold_csv, parse_summary_csv,
    run_grid, stratified_folds, CvOutcome, GridSpec, SummaryRow,
};
use dualgraph_core::graph::{load_dataset, store_dataset};
use dualgraph_core::stats::{boxplot_csv, compare_groups, top_k_by_group, GroupBy, Pooling};
use dualgraph_core::synthetic::{generate, GenSpec};
use dualgraph_core::training::{train_split, write_run_log};
use dualgraph_core::{Dataset, Error, GraphType, Label, Result};
use walkdir::WalkDir;

use crate::{
    CvArgs, GenArgs, GridArgs, IngestArgs, ModelArgs, ReportArgs, StatsArgs, TrainArgs,
    TrainingArgs,
};

const SUMMARY_FILE: &str = "summary.csv";
const FOLDS_FILE: &str = "folds.csv";

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn class_counts(d: &Dataset) -> (usize, usize) {
    let mal = d.labels().iter().filter(|&&l| l == Label::Malicious).count();
    (d.len() - mal, mal)
}

pub fn gen(a: GenArgs) -> Result<()> {
    let spec = GenSpec {
        n_samples: a.n,
        malicious_fraction: a.balance,
        seed: a.seed,
        fcg_nodes: (a.fcg_min, a.fcg_max),
        pcg_nodes: (a.pcg_min, a.pcg_max),
        mode: a.mode,
        strength: a.strength,
        entropy_shift: a.entropy_shift,
    };
    let dataset = generate(&spec)?;
    store_dataset(&dataset, &a.out)?;
    let (benign, mal) = class_counts(&dataset);
    println!(
        "wrote {} samples ({benign} benign, {mal} malicious) to {} seed={}",
        dataset.len(),
        a.out.display(),
        a.seed
    );
    Ok(())
}

pub fn ingest(a: IngestArgs) -> Result<()> {
    let dataset = load_dataset(&a.data)?;
    store_dataset(&dataset, &a.out)?;
    let (benign, mal) = class_counts(&dataset);
    let nodes = |f: fn(&dualgraph_core::SamplePair) -> usize| dataset.samples.iter().map(f).sum::<usize>();
    println!(
        "ingested {} samples ({benign} benign, {mal} malicious; {} FCG nodes, {} PCG nodes) into {}",
        dataset.len(),
        nodes(|s| s.fcg.node_count()),
        nodes(|s| s.pcg.node_count()),
        a.out.display()
    );
    Ok(())
}

fn model_config(m: &ModelArgs, t: &TrainingArgs) -> Result<ModelConfig> {
    let mut c = ModelConfig::new(m.graph, m.feature, m.arch, m.layers, m.fc, m.dim, m.scheduler);
    c.dropout = t.dropout;
    c.train = train_config(t);
    c.validate()?;
    Ok(c)
}

fn train_config(t: &TrainingArgs) -> TrainConfig {
    TrainConfig {
        epochs: t.epochs,
        batch_size: t.batch_size,
        base_lr: t.lr,
        seed: t.seed,
        ..TrainConfig::default()
    }
}

fn run_header(config: &ModelConfig) -> String {
    format!(
        "fingerprint={}\nseed={}\n{}\n",
        config.fingerprint(),
        config.train.seed,
        config.describe()
    )
}

pub fn train(a: TrainArgs) -> Result<()> {
    let mut config = model_config(&a.model, &a.training)?;
    config.train.track_train_f1 = a.track_train_f1;
    let dataset = load_dataset(&a.data)?;
    let folds = stratified_folds(&dataset.labels(), a.training.folds, a.training.seed)?;
    let val = folds.get(a.fold).ok_or_else(|| {
        Error::validation(format!("fold {} out of range for {} folds", a.fold, folds.len()))
    })?;
    let train_idx: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|(f, _)| *f != a.fold)
        .flat_map(|(_, idx)| idx.iter().copied())
        .collect();
    let outcome = train_split(&dataset, &train_idx, val, &config)?;
    save_checkpoint(&a.out.join("model.ckpt"), &outcome.best_params, &config)?;
    write_run_log(&a.out.join("train_log.csv"), &config, &outcome.records)?;
    write(
        &a.out.join("run.txt"),
        &format!(
            "{}best_epoch={}\nbest_val_f1={}\n",
            run_header(&config),
            outcome.best_epoch,
            outcome.best_val_f1
        ),
    )?;
    println!(
        "best epoch {} val F1 {:.4} fingerprint={} seed={}",
        outcome.best_epoch,
        outcome.best_val_f1,
        config.fingerprint(),
        config.train.seed
    );
    Ok(())
}

fn write_outcomes(out: &Path, outcomes: &[CvOutcome], nested_logs: bool) -> Result<()> {
    let rows: Vec<SummaryRow> = outcomes.iter().map(|o| SummaryRow::from(&o.summary)).collect();
    write(&out.join(SUMMARY_FILE), &format_summary_csv(&rows))?;
    write(
        &out.join(FOLDS_FILE),
        &format_fold_csv(outcomes.iter().map(|o| &o.summary)),
    )?;
    for o in outcomes {
        let dir = if nested_logs {
            out.join("logs").join(o.summary.config.fingerprint())
        } else {
            out.join("logs")
        };
        for (f, (cfg, records)) in o.fold_runs.iter().enumerate() {
            write_run_log(&dir.join(format!("fold{f}.csv")), cfg, records)?;
        }
    }
    Ok(())
}

pub fn cv(a: CvArgs) -> Result<()> {
    let config = model_config(&a.model, &a.training)?;
    let dataset = load_dataset(&a.data)?;
    let outcome = cross_validate(&dataset, &config, a.training.seed, a.training.folds)?;
    write_outcomes(&a.out, std::slice::from_ref(&outcome), false)?;
    write(&a.out.join("run.txt"), &run_header(&outcome.summary.config))?;
    let s = &outcome.summary;
    println!(
        "mean F1 {:.4} std {:.4} min {:.4} median {:.4} max {:.4} fingerprint={} seed={}",
        s.mean,
        s.std,
        s.min,
        s.median,
        s.max,
        s.config.fingerprint(),
        a.training.seed
    );
    Ok(())
}

pub fn grid(a: GridArgs) -> Result<()> {
    if a.jobs == 0 {
        return Err(Error::validation("--jobs must be ≥ 1"));
    }
    let spec = GridSpec {
        graph_types: a.graph,
        features: a.feature,
        archs: a.arch,
        layers: a.layers,
        fcs: a.fc,
        dims: a.dim,
        schedulers: a.scheduler,
        dropout: a.training.dropout,
        train: train_config(&a.training),
    };
    for c in spec.cells() {
        c.validate()?;
    }
    let dataset = load_dataset(&a.data)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| Error::validation(format!("cannot start worker pool: {e}")))?;
    let outcomes = pool.install(|| run_grid(&dataset, &spec, a.training.seed, a.training.folds))?;
    write_outcomes(&a.out, &outcomes, true)?;
    let mut index = String::from("fingerprint,seed,config\n");
    for o in &outcomes {
        let c = &o.summary.config;
        let _ = writeln!(index, "{},{},{}", c.fingerprint(), c.train.seed, c.describe());
    }
    write(&a.out.join("runs.csv"), &index)?;
    println!(
        "{} configurations cross-validated; best mean F1 {:.4}",
        outcomes.len(),
        outcomes[0].summary.mean
    );
    Ok(())
}

/// Result files named `name` under `root`, in sorted path order.
fn find_files(root: &Path, name: &str) -> Result<Vec<PathBuf>> {
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "runs directory not found"),
        ));
    }
    let mut files = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::io(root, e.into()))?;
        if entry.file_type().is_file() && entry.file_name() == name {
            files.push(entry.into_path());
        }
    }
    if files.is_empty() {
        return Err(Error::validation(format!(
            "no {name} found under {}",
            root.display()
        )));
    }
    Ok(files)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn load_summaries(root: &Path) -> Result<Vec<SummaryRow>> {
    let mut rows = Vec::new();
    for path in find_files(root, SUMMARY_FILE)? {
        rows.extend(parse_summary_csv(&read(&path)?, &path)?);
    }
    Ok(rows)
}

pub fn stats(a: StatsArgs) -> Result<()> {
    let scores: Vec<(ConfigKey, f64)> = match a.pool {
        Pooling::Means => load_summaries(&a.runs)?
            .into_iter()
            .map(|r| (r.key, r.mean))
            .collect(),
        Pooling::Folds => {
            let mut s = Vec::new();
            for path in find_files(&a.runs, FOLDS_FILE)? {
                s.extend(parse_fold_csv(&read(&path)?, &path)?.into_iter().map(|r| (r.key, r.f1)));
            }
            s
        }
    };
    let groups = top_k_by_group(&scores, a.group_by, a.pool, a.top_k)?;
    if groups.len() < 2 {
        return Err(Error::validation(format!(
            "need at least 2 non-empty groups, found {}",
            groups.len()
        )));
    }
    let report = compare_groups(&groups)?;
    let suffix = match a.group_by {
        GroupBy::GraphType => "graph_type",
        GroupBy::Feature => "feature",
    };
    write(&a.out.join(format!("pairwise_{suffix}.csv")), &report.to_csv())?;
    write(&a.out.join(format!("boxplot_{suffix}.csv")), &boxplot_csv(&groups)?)?;
    println!(
        "Kruskal-Wallis H={} p={} over {} groups",
        report.omnibus.h,
        report.omnibus.p,
        groups.len()
    );
    Ok(())
}

pub fn report(a: ReportArgs) -> Result<()> {
    if a.top == 0 {
        return Err(Error::validation("--top must be ≥ 1"));
    }
    let rows = load_summaries(&a.runs)?;
    let mut md = String::from("# Cross-validated F1 by graph input\n");
    for g in [GraphType::Dual, GraphType::Merged, GraphType::Fcg, GraphType::Pcg] {
        let mut sel: Vec<&SummaryRow> = rows.iter().filter(|r| r.key.graph_type == g).collect();
        if sel.is_empty() {
            continue;
        }
        sel.sort_by(|x, y| y.mean.total_cmp(&x.mean));
        let _ = writeln!(md, "\n## {g} ({})\n", g.join_embeddings());
        md.push_str("| feature | model_arch | layer | fc | dim | scheduler | mean | std | min | median | max |\n");
        md.push_str("|---|---|---|---|---|---|---|---|---|---|---|\n");
        for r in sel.into_iter().take(a.top) {
            let k = &r.key;
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} | {:.2} | {:.2} | {:.2} | {:.2} | {:.2} |",
                k.feature, k.arch, k.layers, k.fc, k.dim, k.scheduler, r.mean, r.std, r.min, r.median, r.max
            );
        }
    }
    write(&a.out.join("report.md"), &md)?;
    println!("wrote {}", a.out.join("report.md").display());
    Ok(())
}
