//! `dualgraph`: dataset generation and ingestion, training, cross-validated
//! grids, rank statistics and reports.
//!
//! Exit codes: 0 on success, 1 on invalid input, 2 on I/O failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dualgraph_core::stats::{GroupBy, Pooling, DEFAULT_TOP_K};
use dualgraph_core::synthetic::SignalMode;
use dualgraph_core::{ArchKind, FeatureMode, GraphType, SchedulerKind};

#[derive(Debug, Parser)]
#[command(name = "dualgraph", version, about = "Dual-graph malware classification pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labeled synthetic dataset in the canonical layout.
    Gen(GenArgs),
    /// Validate an externally produced dataset and rewrite it canonically.
    Ingest(IngestArgs),
    /// Train one model on a single train/validation split and save a checkpoint.
    Train(TrainArgs),
    /// Cross-validate one configuration.
    Cv(CvArgs),
    /// Cross-validate every configuration of a hyperparameter grid.
    Grid(GridArgs),
    /// Kruskal–Wallis and Dunn tests over the top-K scores of each group.
    Stats(StatsArgs),
    /// Markdown tables of the best configurations per graph type.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Number of samples.
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Where the class signal lives: fcg_only, pcg_only or complementary.
    #[arg(long, default_value = "complementary", value_parser = parse_mode)]
    mode: SignalMode,
    /// Cue strength in [0, 1].
    #[arg(long, default_value_t = dualgraph_core::synthetic::CALIBRATED_STRENGTH)]
    strength: f64,
    /// Fraction of malicious samples.
    #[arg(long, default_value_t = 0.5)]
    balance: f64,
    /// Separation of class entropy means in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    entropy_shift: f64,
    #[arg(long, default_value_t = 50)]
    fcg_min: usize,
    #[arg(long, default_value_t = 400)]
    fcg_max: usize,
    #[arg(long, default_value_t = 3)]
    pcg_min: usize,
    #[arg(long, default_value_t = 20)]
    pcg_max: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output dataset directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Dataset directory containing manifest.jsonl.
    #[arg(long)]
    data: PathBuf,
    /// Output directory for the canonical copy.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Clone)]
struct ModelArgs {
    /// Graph input: fcg, pcg, merged or dual.
    #[arg(long, default_value = "dual", value_parser = parse_graph)]
    graph: GraphType,
    /// Node features: ldp, entropy or ldp+entropy.
    #[arg(long, default_value = "ldp+entropy", value_parser = parse_feature)]
    feature: FeatureMode,
    /// Message-passing layer: gcn, gin, sage, sgc or mlp.
    #[arg(long, default_value = "gcn", value_parser = parse_arch)]
    arch: ArchKind,
    /// Message-passing layers (propagation steps for sgc).
    #[arg(long, default_value_t = 4)]
    layers: usize,
    /// Fully connected layers in the head.
    #[arg(long, default_value_t = 2)]
    fc: usize,
    /// Hidden dimension.
    #[arg(long, default_value_t = 32)]
    dim: usize,
    /// Learning-rate schedule: onecycle or plateau.
    #[arg(long, default_value = "onecycle", value_parser = parse_scheduler)]
    scheduler: SchedulerKind,
}

#[derive(Debug, Args, Clone)]
struct TrainingArgs {
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    /// Samples per optimizer step.
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    /// Base (peak for onecycle) learning rate.
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// Dropout probability in the head.
    #[arg(long, default_value_t = 0.5)]
    dropout: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of stratified folds.
    #[arg(long, default_value_t = dualgraph_core::evaluation::DEFAULT_FOLDS)]
    folds: usize,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    training: TrainingArgs,
    /// Fold held out for validation.
    #[arg(long, default_value_t = 0)]
    fold: usize,
    /// Also log training-split F1 per epoch.
    #[arg(long)]
    track_train_f1: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CvArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    training: TrainingArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated graph inputs.
    #[arg(long, value_delimiter = ',', default_value = "fcg,pcg,merged,dual", value_parser = parse_graph)]
    graph: Vec<GraphType>,
    /// Comma-separated feature modes.
    #[arg(long, value_delimiter = ',', default_value = "ldp,entropy,ldp+entropy", value_parser = parse_feature)]
    feature: Vec<FeatureMode>,
    /// Comma-separated layer kinds.
    #[arg(long, value_delimiter = ',', default_value = "gcn,gin,sage,sgc,mlp", value_parser = parse_arch)]
    arch: Vec<ArchKind>,
    #[arg(long, value_delimiter = ',', default_value = "2,4,6")]
    layers: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "2,4,6")]
    fc: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "32,64")]
    dim: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "onecycle,plateau", value_parser = parse_scheduler)]
    scheduler: Vec<SchedulerKind>,
    #[command(flatten)]
    training: TrainingArgs,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Directory searched recursively for summary.csv / folds.csv.
    #[arg(long)]
    runs: PathBuf,
    /// Grouping key: graph_type or feature.
    #[arg(long, default_value = "graph_type", value_parser = parse_group_by)]
    group_by: GroupBy,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    top_k: usize,
    /// Scores entering top-K: means (per configuration) or folds.
    #[arg(long, default_value = "means", value_parser = parse_pooling)]
    pool: Pooling,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Directory searched recursively for summary.csv.
    #[arg(long)]
    runs: PathBuf,
    /// Rows per graph-type table.
    #[arg(long, default_value_t = 5)]
    top: usize,
    #[arg(long)]
    out: PathBuf,
}

fn parse_graph(s: &str) -> Result<GraphType, String> {
    s.parse().map_err(|e: dualgraph_core::Error| e.to_string())
}

fn parse_feature(s: &str) -> Result<FeatureMode, String> {
    s.parse().map_err(|e: dualgraph_core::Error| e.to_string())
}

fn parse_arch(s: &str) -> Result<ArchKind, String> {
    s.parse().map_err(|e: dualgraph_core::Error| e.to_string())
}

fn parse_scheduler(s: &str) -> Result<SchedulerKind, String> {
    s.parse().map_err(|e: dualgraph_core::Error| e.to_string())
}

fn parse_mode(s: &str) -> Result<SignalMode, String> {
    s.parse().map_err(|e: dualgraph_core::Error| e.to_string())
}

fn parse_group_by(s: &str) -> Result<GroupBy, String> {
    s.parse().map_err(|e: dualgraph_core::Error| e.to_string())
}

fn parse_pooling(s: &str) -> Result<Pooling, String> {
    s.parse().map_err(|e: dualgraph_core::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Ingest(a) => commands::ingest(a),
        Command::Train(a) => commands::train(a),
        Command::Cv(a) => commands::cv(a),
        Command::Grid(a) => commands::grid(a),
        Command::Stats(a) => commands::stats(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
