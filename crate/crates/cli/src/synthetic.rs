use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;
use vfdetect::ingest::to_input_json;
use vfdetect::synthetic::{generate, SyntheticConfig};

use crate::{write_atomic, write_json_atomic};

/// Write a seeded synthetic labeled dataset and matching issue corpus.
#[derive(Debug, Parser)]
#[command(name = "synthetic")]
pub struct Args {
    /// Labeled commit file to write.
    #[arg(long, default_value = "synthetic.json")]
    pub output: PathBuf,

    /// Directory receiving one JSON file per corpus issue.
    #[arg(long = "corpus-dir", alias = "corpus_dir", default_value = "corpus")]
    pub corpus_dir: PathBuf,

    #[arg(long, default_value_t = 250)]
    pub commits: usize,

    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

pub fn run(args: &Args) -> Result<(usize, usize)> {
    let data = generate(&SyntheticConfig {
        commits: args.commits,
        seed: args.seed,
        ..SyntheticConfig::default()
    });
    let mut json = to_input_json(&data.records)?;
    json.push('\n');
    write_atomic(&args.output, json.as_bytes())?;
    std::fs::create_dir_all(&args.corpus_dir)
        .with_context(|| format!("creating {}", args.corpus_dir.display()))?;
    for (i, issue) in data.corpus.iter().enumerate() {
        write_json_atomic(&args.corpus_dir.join(format!("issue_{i:04}.json")), issue)?;
    }
    Ok((data.records.len(), data.corpus.len()))
}

pub fn main_run(args: Args) -> Result<()> {
    let (commits, issues) = run(&args)?;
    println!(
        "wrote {commits} commits to {} and {issues} issues to {}",
        args.output.display(),
        args.corpus_dir.display()
    );
    Ok(())
}
