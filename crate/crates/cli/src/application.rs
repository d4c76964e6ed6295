use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use vfdetect::ensemble::rank_commits;
use vfdetect::ingest::{parse_input_file, validate_records};
use vfdetect::linker::LinkerIndex;
use vfdetect::pipeline::TrainedPipeline;

use crate::{write_json_atomic, LINKER_FILE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Every commit with its probability and flag, in input order.
    Prediction,
    /// Every commit with its probability, most likely first.
    Ranking,
}

/// Score commits with a trained model.
#[derive(Debug, Parser)]
#[command(name = "application")]
pub struct Args {
    #[arg(long, value_enum)]
    pub mode: Mode,

    /// Commits to score (JSON array in the input schema).
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long)]
    pub output: PathBuf,

    /// Decision threshold in [0, 1]; prediction mode only. Defaults to the
    /// threshold stored with the model (0.5).
    #[arg(long)]
    pub threshold: Option<f64>,

    #[arg(long = "model-dir", alias = "model_dir", default_value = "models")]
    pub model_dir: PathBuf,

    /// Linker artifact. Defaults to `linker.json` inside the model
    /// directory when present; without one, no links are recovered.
    #[arg(long)]
    pub linker: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub probability: f64,
    pub prediction: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    pub id: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Prediction(Vec<Prediction>),
    Ranking(Vec<Ranked>),
}

impl Output {
    pub fn len(&self) -> usize {
        match self {
            Output::Prediction(v) => v.len(),
            Output::Ranking(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn resolve_linker(args: &Args) -> Result<Option<LinkerIndex>> {
    let path = match &args.linker {
        Some(p) => p.clone(),
        None => {
            let default = args.model_dir.join(LINKER_FILE);
            if !default.is_file() {
                log::info!("no linker found; commits without an issue will not be linked");
                return Ok(None);
            }
            default
        }
    };
    let index =
        LinkerIndex::load(&path).with_context(|| format!("loading linker {}", path.display()))?;
    Ok(Some(index))
}

fn load_model(dir: &Path) -> Result<TrainedPipeline> {
    if !dir.is_dir() {
        bail!("model directory not found: {}", dir.display());
    }
    TrainedPipeline::load(dir).with_context(|| format!("loading models from {}", dir.display()))
}

/// Scores the input and writes the output file. The file appears only once
/// it has been written in full.
pub fn run(args: &Args) -> Result<Output> {
    if let Some(t) = args.threshold {
        if !(0.0..=1.0).contains(&t) {
            bail!("threshold {t} outside [0, 1]");
        }
    }
    if !args.input.is_file() {
        bail!("input file not found: {}", args.input.display());
    }
    let mut pipeline = load_model(&args.model_dir)?;
    let linker = resolve_linker(args)?;

    let records = parse_input_file(&args.input)?;
    let violations = validate_records(&records, false);
    if !violations.is_empty() {
        bail!(
            "invalid input {}:\n  {}",
            args.input.display(),
            violations.join("\n  ")
        );
    }

    let output = match args.mode {
        Mode::Prediction => {
            if let Some(t) = args.threshold {
                pipeline = pipeline.with_threshold(t)?;
            }
            let scored = pipeline.score_commits(&records, linker.as_ref())?;
            let rows: Vec<Prediction> = scored
                .into_iter()
                .map(|s| Prediction {
                    id: s.id,
                    probability: s.probability,
                    prediction: s.flagged,
                })
                .collect();
            write_json_atomic(&args.output, &rows)?;
            Output::Prediction(rows)
        }
        Mode::Ranking => {
            if args.threshold.is_some() {
                log::warn!("--threshold has no effect in ranking mode; ignoring it");
            }
            let scored = pipeline.score_commits(&records, linker.as_ref())?;
            let rows: Vec<Ranked> = rank_commits(scored)
                .into_iter()
                .map(|s| Ranked {
                    id: s.id,
                    probability: s.probability,
                })
                .collect();
            write_json_atomic(&args.output, &rows)?;
            Output::Ranking(rows)
        }
    };
    Ok(output)
}

pub fn main_run(args: Args) -> Result<()> {
    let output = run(&args)?;
    match &output {
        Output::Prediction(rows) => println!(
            "scored {} commits, {} flagged -> {}",
            rows.len(),
            rows.iter().filter(|r| r.prediction).count(),
            args.output.display()
        ),
        Output::Ranking(rows) => {
            println!("ranked {} commits -> {}", rows.len(), args.output.display())
        }
    }
    Ok(())
}
