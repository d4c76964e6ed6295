use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;
use vfdetect::linker::{load_corpus, LinkerConfig, LinkerIndex, DEFAULT_SIMILARITY_THRESHOLD};

/// Build the issue linker from a corpus directory of issue JSON files.
#[derive(Debug, Parser)]
#[command(name = "linker_builder")]
pub struct Args {
    /// Directory holding one `{title, body, comments}` JSON file per issue.
    #[arg(long = "corpus_path", alias = "corpus-path")]
    pub corpus_path: PathBuf,

    /// Where the linker artifact is written.
    #[arg(long, default_value = "linker.json")]
    pub output: PathBuf,

    /// Minimum similarity (exclusive) for a link to be recovered.
    #[arg(long, default_value_t = DEFAULT_SIMILARITY_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub issues: usize,
    pub nl_vocabulary: usize,
    pub code_vocabulary: usize,
    pub output: PathBuf,
}

pub fn run(args: &Args) -> Result<Summary> {
    let config = LinkerConfig::new(args.threshold)?;
    let issues = load_corpus(&args.corpus_path)?;
    let index = LinkerIndex::build(issues, config)?;
    if let Some(parent) = args.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    index.persist(&args.output)?;
    Ok(Summary {
        issues: index.len(),
        nl_vocabulary: index.nl_model().vocabulary_size(),
        code_vocabulary: index.code_model().vocabulary_size(),
        output: args.output.clone(),
    })
}

pub fn main_run(args: Args) -> Result<()> {
    let s = run(&args)?;
    println!(
        "indexed {} issues (nl vocabulary {}, code vocabulary {}) -> {}",
        s.issues,
        s.nl_vocabulary,
        s.code_vocabulary,
        s.output.display()
    );
    Ok(())
}
