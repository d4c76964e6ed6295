use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Parser;
use vfdetect::classifier::{Backend, TrainingConfig};
use vfdetect::ensemble::DEFAULT_FOLDS;
use vfdetect::evaluation::EvaluationReport;
use vfdetect::ingest::{parse_input_file, validate_records, LabeledDataset};
use vfdetect::linker::LinkerIndex;
use vfdetect::pipeline::{evaluate_pipeline, PipelineOptions};

use crate::write_json_atomic;

/// Split labeled commits, train on one part and report per-classifier and
/// ensemble scores on the other.
#[derive(Debug, Parser)]
#[command(name = "evaluate")]
pub struct Args {
    #[arg(long = "data_path", alias = "data-path")]
    pub data_path: PathBuf,

    #[arg(long)]
    pub linker: Option<PathBuf>,

    #[arg(long, default_value = "fallback")]
    pub backend: Backend,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    pub folds: usize,

    /// Share of each class used for training.
    #[arg(long = "train-fraction", default_value_t = 0.8)]
    pub train_fraction: f64,

    #[arg(long = "split-seed", default_value_t = 7)]
    pub split_seed: u64,

    /// Row label in the printed table.
    #[arg(long, default_value = "vfdetect")]
    pub name: String,

    /// Optional JSON report with metrics and the unique-true-positive ablation.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn run(args: &Args) -> Result<EvaluationReport> {
    let records = parse_input_file(&args.data_path)?;
    let violations = validate_records(&records, true);
    if !violations.is_empty() {
        bail!(
            "invalid data {}:\n  {}",
            args.data_path.display(),
            violations.join("\n  ")
        );
    }
    let data = LabeledDataset::new(records)?;
    let mut training = TrainingConfig::default();
    if let Some(seed) = args.seed {
        training.seed = seed;
    }
    let options = PipelineOptions {
        backend: args.backend,
        training,
        folds: args.folds,
    };
    let linker = args
        .linker
        .as_ref()
        .map(|p| LinkerIndex::load(p).with_context(|| format!("loading linker {}", p.display())))
        .transpose()?;
    let (_, report) = evaluate_pipeline(
        &data,
        &options,
        linker.as_ref(),
        args.train_fraction,
        args.split_seed,
    )?;
    if let Some(path) = &args.report {
        write_json_atomic(path, &report)?;
    }
    Ok(report)
}

pub fn main_run(args: Args) -> Result<()> {
    let report = run(&args)?;
    print!("{}", report.render_table(&args.name));
    let uniques: Vec<String> = report
        .ablation
        .uniques
        .iter()
        .map(|(k, v)| format!("{k} {v}"))
        .collect();
    println!(
        "train {} / test {}; unique true positives: {}; discovered {}",
        report.train_size,
        report.test_size,
        uniques.join(", "),
        report.ablation.total_discovered
    );
    Ok(())
}
