use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Parser;
use vfdetect::classifier::{Backend, TrainingConfig};
use vfdetect::ensemble::DEFAULT_FOLDS;
use vfdetect::ingest::{parse_input_file, validate_records, LabeledDataset};
use vfdetect::linker::LinkerIndex;
use vfdetect::pipeline::{train_pipeline, PipelineOptions};

use crate::LINKER_FILE;

const SHOWN_VIOLATIONS: usize = 10;

/// Train the three base classifiers and the stacking ensemble.
#[derive(Debug, Parser)]
#[command(name = "model_builder")]
pub struct Args {
    /// Labeled commits: the input schema plus a boolean `label` per commit.
    #[arg(long = "data_path", alias = "data-path")]
    pub data_path: PathBuf,

    /// Model directory to write.
    #[arg(
        long = "model-dir",
        alias = "model_dir",
        alias = "output",
        default_value = "models"
    )]
    pub model_dir: PathBuf,

    /// Linker artifact used to recover issues for commits without one. It
    /// is copied into the model directory for later inference.
    #[arg(long)]
    pub linker: Option<PathBuf>,

    #[arg(long, default_value = "fallback")]
    pub backend: Backend,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Folds used to produce the stacker's training features.
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    pub folds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub records: usize,
    pub positives: usize,
    pub issue_classifier: bool,
    pub weights: [f64; 3],
    pub bias: f64,
    pub model_dir: PathBuf,
}

pub fn run(args: &Args) -> Result<Summary> {
    let records = parse_input_file(&args.data_path)?;
    let violations = validate_records(&records, true);
    if !violations.is_empty() {
        let mut message = format!(
            "{} schema violation(s) in {}:",
            violations.len(),
            args.data_path.display()
        );
        for v in violations.iter().take(SHOWN_VIOLATIONS) {
            message.push_str("\n  ");
            message.push_str(v);
        }
        if violations.len() > SHOWN_VIOLATIONS {
            message.push_str(&format!(
                "\n  ... and {} more",
                violations.len() - SHOWN_VIOLATIONS
            ));
        }
        bail!(message);
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

    let pipeline = train_pipeline(&data, &options, linker.as_ref())?;
    pipeline.save(&args.model_dir)?;
    if let Some(index) = &linker {
        index.persist(args.model_dir.join(LINKER_FILE))?;
    }
    Ok(Summary {
        records: data.len(),
        positives: data.positive_count(),
        issue_classifier: pipeline.classifiers.issue.is_some(),
        weights: pipeline.ensemble.weights,
        bias: pipeline.ensemble.bias,
        model_dir: args.model_dir.clone(),
    })
}

pub fn main_run(args: Args) -> Result<()> {
    let s = run(&args)?;
    println!(
        "trained on {} commits ({} positive); stacker weights message {:.4}, issue {:.4}, patch {:.4}, bias {:.4}{} -> {}",
        s.records,
        s.positives,
        s.weights[0],
        s.weights[1],
        s.weights[2],
        s.bias,
        if s.issue_classifier { "" } else { " (issue probabilities imputed)" },
        s.model_dir.display()
    );
    Ok(())
}
