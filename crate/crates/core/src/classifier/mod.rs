//! Base probability classifiers over the three information sources of a
//! commit: its message, its (explicit or linked) issue, and its patch.
//!
//! Two backends share one contract. The encoder backend embeds token
//! sequences with an [`Encoder`] and fine-tunes a two-logit head with
//! mini-batch SGD and early stopping. The fallback backend uses TF-IDF bag
//! of words with a full-batch, L2-regularized head whose penalty is picked
//! on a validation split. Patch classifiers embed each file's
//! [`PatchInput`] separately and average the file embeddings before the head.

mod encoder;
mod head;
mod patch_input;
mod tokenize;

pub use encoder::{Encoder, HashingEncoder, HASH_EMBED_ID};
pub use head::{SgdSchedule, SoftmaxHead};
pub use patch_input::{
    build_patch_input, build_patch_input_with, build_text_input, PatchInput, CLS_TOKEN, EOS_TOKEN,
    SEP_TOKEN,
};
pub use tokenize::{SimpleTokenizer, Tokenizer};

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::stratified_partition;
use crate::ingest::{FileChange, LabeledDataset};
use crate::tfidf::{count_terms, TermChannel, TermCounts, TfidfModel};

pub const BUILTIN_ENCODERS: &[&str] = &[HASH_EMBED_ID];
pub const FALLBACK_ENCODER_ID: &str = "tfidf-bow";
pub const CLASSIFIER_FORMAT_VERSION: u32 = 1;

/// L2 penalties tried by the fallback backend, smallest first.
const FALLBACK_L2_GRID: [f64; 4] = [1e-4, 1e-3, 1e-2, 1e-1];
const FALLBACK_DEFAULT_L2: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Message,
    Issue,
    Patch,
}

impl Source {
    pub const ALL: [Source; 3] = [Source::Message, Source::Issue, Source::Patch];

    pub fn name(self) -> &'static str {
        match self {
            Source::Message => "message",
            Source::Issue => "issue",
            Source::Patch => "patch",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Encoder,
    Fallback,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "encoder" => Ok(Backend::Encoder),
            "fallback" => Ok(Backend::Fallback),
            other => Err(Error::InvalidConfig(format!(
                "unknown backend {other:?} (expected \"encoder\" or \"fallback\")"
            ))),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Encoder => "encoder",
            Backend::Fallback => "fallback",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub encoder_id: String,
    pub max_tokens: usize,
    /// For the fallback backend this is the fitted vocabulary size.
    pub embedding_dim: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            encoder_id: HASH_EMBED_ID.to_string(),
            max_tokens: 512,
            embedding_dim: 256,
        }
    }
}

impl EncoderConfig {
    pub fn for_backend(backend: Backend) -> Self {
        match backend {
            Backend::Encoder => Self::default(),
            Backend::Fallback => Self {
                encoder_id: FALLBACK_ENCODER_ID.to_string(),
                embedding_dim: 0,
                ..Self::default()
            },
        }
    }

    pub fn validate(&self, backend: Backend) -> Result<()> {
        if self.max_tokens < 8 {
            return Err(Error::InvalidConfig(format!(
                "max_tokens {} < 8",
                self.max_tokens
            )));
        }
        match backend {
            Backend::Encoder => {
                if !BUILTIN_ENCODERS.contains(&self.encoder_id.as_str()) {
                    return Err(Error::UnknownEncoder(self.encoder_id.clone()));
                }
                if self.embedding_dim == 0 {
                    return Err(Error::InvalidConfig(
                        "embedding_dim must be positive".into(),
                    ));
                }
            }
            Backend::Fallback => {
                if self.encoder_id != FALLBACK_ENCODER_ID {
                    return Err(Error::InvalidConfig(format!(
                        "fallback backend uses encoder id {FALLBACK_ENCODER_ID:?}, got {:?}",
                        self.encoder_id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Hyperparameters. The defaults are this implementation's choices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub validation_fraction: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 16,
            learning_rate: 2.0,
            seed: 42,
            validation_fraction: 0.2,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0
            || self.batch_size == 0
            || self.learning_rate.is_nan()
            || self.learning_rate <= 0.0
        {
            return Err(Error::InvalidConfig(
                "epochs, batch_size and learning_rate must be positive".into(),
            ));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction <= 0.5) {
            return Err(Error::InvalidConfig(format!(
                "validation_fraction {} outside (0, 0.5]",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum TrainedState {
    Fallback {
        vectorizer: TfidfModel,
        l2: f64,
        head: SoftmaxHead,
    },
    Encoder {
        epochs_run: usize,
        head: SoftmaxHead,
    },
}

impl TrainedState {
    fn head(&self) -> &SoftmaxHead {
        match self {
            TrainedState::Fallback { head, .. } | TrainedState::Encoder { head, .. } => head,
        }
    }
}

/// A probability scorer over one information source. Immutable once
/// trained; inference is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    source: Source,
    backend: Backend,
    config: EncoderConfig,
    seed: u64,
    state: Option<TrainedState>,
}

/// Input handed to a classifier, borrowed from a commit.
#[derive(Debug, Clone, Copy)]
pub enum SourceInput<'a> {
    Text(&'a str),
    Patch(&'a [FileChange]),
}

impl ClassifierModel {
    /// An untrained model; every prediction fails with [`Error::Untrained`].
    pub fn untrained(source: Source, backend: Backend, config: EncoderConfig) -> Self {
        Self {
            source,
            backend,
            config,
            seed: 0,
            state: None,
        }
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_trained(&self) -> bool {
        self.state.is_some()
    }

    pub fn head(&self) -> Option<&SoftmaxHead> {
        self.state.as_ref().map(TrainedState::head)
    }

    pub fn classify_text(&self, text: &str) -> Result<f64> {
        if self.source == Source::Patch {
            return Err(Error::InvalidConfig(
                "patch classifier cannot score text".into(),
            ));
        }
        let state = self.state.as_ref().ok_or(Error::Untrained)?;
        Ok(state.head().probability(&self.embed_text(state, text)))
    }

    /// Scores a commit's file changes: per-file embeddings are averaged, and
    /// an empty change list scores the zero embedding.
    pub fn classify_patch(&self, changes: &[FileChange]) -> Result<f64> {
        if self.source != Source::Patch {
            return Err(Error::InvalidConfig(format!(
                "{} classifier cannot score patches",
                self.source
            )));
        }
        let state = self.state.as_ref().ok_or(Error::Untrained)?;
        Ok(state.head().probability(&self.embed_patch(state, changes)))
    }

    pub fn classify(&self, input: SourceInput<'_>) -> Result<f64> {
        match input {
            SourceInput::Text(text) => self.classify_text(text),
            SourceInput::Patch(changes) => self.classify_patch(changes),
        }
    }

    fn embed_text(&self, state: &TrainedState, text: &str) -> Vec<f64> {
        match state {
            TrainedState::Fallback { vectorizer, .. } => {
                bag_of_words_embedding(vectorizer, &SimpleTokenizer::TEXT.tokenize(text))
            }
            TrainedState::Encoder { .. } => {
                let tokens = build_text_input(text, &self.config, &SimpleTokenizer::TEXT);
                self.encoder().embed(&tokens)
            }
        }
    }

    fn embed_file(&self, state: &TrainedState, change: &FileChange) -> Vec<f64> {
        let input = build_patch_input(change, &self.config);
        match state {
            TrainedState::Fallback { vectorizer, .. } => {
                let terms = patch_terms(&input);
                vectorizer
                    .vectorize(&terms)
                    .to_dense(vectorizer.vocabulary_size())
            }
            TrainedState::Encoder { .. } => self.encoder().embed(input.tokens()),
        }
    }

    fn embed_patch(&self, state: &TrainedState, changes: &[FileChange]) -> Vec<f64> {
        let dim = state.head().dim();
        mean_embedding(changes.iter().map(|c| self.embed_file(state, c)), dim)
    }

    fn encoder(&self) -> HashingEncoder {
        HashingEncoder::new(self.config.embedding_dim, self.seed)
    }

    /// Writes `manifest.json` and `weights.json` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let manifest = ClassifierManifest {
            format_version: CLASSIFIER_FORMAT_VERSION,
            source: self.source,
            backend: self.backend,
            config: self.config.clone(),
            seed: self.seed,
            trained: self.state.is_some(),
        };
        write_json(&dir.join("manifest.json"), &manifest)?;
        if let Some(state) = &self.state {
            write_json(&dir.join("weights.json"), state)?;
        }
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest: ClassifierManifest = read_json(&dir.join("manifest.json"), "classifier")?;
        if manifest.format_version != CLASSIFIER_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                artifact: "classifier",
                expected: CLASSIFIER_FORMAT_VERSION,
                found: manifest.format_version,
            });
        }
        manifest.config.validate(manifest.backend)?;
        let state = if manifest.trained {
            let state: TrainedState = read_json(&dir.join("weights.json"), "classifier")?;
            let consistent = match (&state, manifest.backend) {
                (
                    TrainedState::Fallback {
                        vectorizer, head, ..
                    },
                    Backend::Fallback,
                ) => vectorizer.vocabulary_size() == head.dim(),
                (TrainedState::Encoder { head, .. }, Backend::Encoder) => {
                    head.dim() == manifest.config.embedding_dim
                }
                _ => false,
            };
            if !consistent {
                return Err(Error::CorruptArtifact {
                    artifact: "classifier",
                    path: dir.join("weights.json"),
                    message: "weights do not match the manifest".into(),
                });
            }
            Some(state)
        } else {
            None
        };
        Ok(Self {
            source: manifest.source,
            backend: manifest.backend,
            config: manifest.config,
            seed: manifest.seed,
            state,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ClassifierManifest {
    format_version: u32,
    source: Source,
    backend: Backend,
    config: EncoderConfig,
    seed: u64,
    trained: bool,
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(
    path: &Path,
    artifact: &'static str,
) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::CorruptArtifact {
        artifact,
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn bag_of_words_embedding(vectorizer: &TfidfModel, tokens: &[String]) -> Vec<f64> {
    let terms = count_terms(tokens.iter().cloned());
    vectorizer
        .vectorize(&terms)
        .to_dense(vectorizer.vocabulary_size())
}

/// Side-marked code tokens of a patch input: `-tok` before the separator,
/// `+tok` after it, sentinels dropped.
fn patch_terms(input: &PatchInput) -> TermCounts {
    let removed = input.removed().iter().map(|t| format!("-{t}"));
    let added = input.added().iter().map(|t| format!("+{t}"));
    count_terms(removed.chain(added))
}

fn mean_embedding(embeddings: impl Iterator<Item = Vec<f64>>, dim: usize) -> Vec<f64> {
    let mut sum = vec![0.0; dim];
    let mut count = 0usize;
    for e in embeddings {
        for (s, x) in sum.iter_mut().zip(&e) {
            *s += x;
        }
        count += 1;
    }
    if count > 1 {
        let n = count as f64;
        sum.iter_mut().for_each(|s| *s /= n);
    }
    sum
}

enum Owned {
    Text(String),
    Patch(Vec<FileChange>),
}

fn training_inputs(data: &LabeledDataset, source: Source) -> (Vec<Owned>, Vec<bool>) {
    let mut inputs = Vec::new();
    let mut labels = Vec::new();
    for record in data.records() {
        let input = match source {
            Source::Message => Owned::Text(record.message.clone()),
            Source::Issue => match &record.issue {
                Some(issue) => Owned::Text(issue.classifier_text()),
                None => continue,
            },
            Source::Patch => Owned::Patch(record.patch.clone()),
        };
        inputs.push(input);
        labels.push(record.label == Some(true));
    }
    (inputs, labels)
}

pub fn train_classifier(
    data: &LabeledDataset,
    source: Source,
    backend: Backend,
    config: &TrainingConfig,
) -> Result<ClassifierModel> {
    train_classifier_with(
        data,
        source,
        backend,
        EncoderConfig::for_backend(backend),
        config,
    )
}

/// Trains one base classifier. For the issue source, records without an
/// issue are left out. Reproducible for a fixed `config.seed`.
pub fn train_classifier_with(
    data: &LabeledDataset,
    source: Source,
    backend: Backend,
    encoder_config: EncoderConfig,
    config: &TrainingConfig,
) -> Result<ClassifierModel> {
    config.validate()?;
    encoder_config.validate(backend)?;
    let (inputs, labels) = training_inputs(data, source);
    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::DegenerateLabels(format!(
            "{source} classifier: {positives} positive of {} usable records",
            labels.len()
        )));
    }

    // A validation split needs at least two records of each class.
    let split = stratified_partition(&labels, 1.0 - config.validation_fraction, config.seed).ok();

    let mut model = ClassifierModel {
        source,
        backend,
        config: encoder_config,
        seed: config.seed,
        state: None,
    };
    let state = match backend {
        Backend::Fallback => train_fallback(&mut model, &inputs, &labels, split.as_ref()),
        Backend::Encoder => train_encoder(&model, &inputs, &labels, split.as_ref(), config),
    };
    model.state = Some(state);
    Ok(model)
}

fn fallback_documents(inputs: &[&Owned], config: &EncoderConfig) -> Vec<TermCounts> {
    let mut docs = Vec::new();
    for input in inputs {
        match input {
            Owned::Text(text) => docs.push(count_terms(SimpleTokenizer::TEXT.tokenize(text))),
            Owned::Patch(changes) => {
                docs.extend(
                    changes
                        .iter()
                        .map(|c| patch_terms(&build_patch_input(c, config))),
                );
            }
        }
    }
    docs
}

fn fit_fallback_state(
    model: &ClassifierModel,
    inputs: &[&Owned],
    labels: &[bool],
    l2: f64,
) -> TrainedState {
    let docs = fallback_documents(inputs, &model.config);
    // Patch sources may have no files at all; an empty vocabulary still yields a usable bias-only head.
    let vectorizer = TfidfModel::fit(docs.iter(), TermChannel::Tokens).unwrap_or_else(|_| {
        TfidfModel::fit(std::iter::once(&TermCounts::new()), TermChannel::Tokens)
            .expect("one document")
    });
    let dim = vectorizer.vocabulary_size();
    let placeholder = TrainedState::Fallback {
        vectorizer,
        l2,
        head: SoftmaxHead::zeros(dim),
    };
    let features: Vec<Vec<f64>> = inputs
        .iter()
        .map(|i| model.embed_owned(&placeholder, i))
        .collect();
    let TrainedState::Fallback { vectorizer, .. } = placeholder else {
        unreachable!()
    };
    TrainedState::Fallback {
        vectorizer,
        l2,
        head: SoftmaxHead::fit(&features, labels, dim, l2),
    }
}

fn train_fallback(
    model: &mut ClassifierModel,
    inputs: &[Owned],
    labels: &[bool],
    split: Option<&(Vec<usize>, Vec<usize>)>,
) -> TrainedState {
    let l2 = match split {
        Some((train_idx, val_idx)) => {
            let train_inputs: Vec<&Owned> = train_idx.iter().map(|&i| &inputs[i]).collect();
            let train_labels: Vec<bool> = train_idx.iter().map(|&i| labels[i]).collect();
            let val_labels: Vec<bool> = val_idx.iter().map(|&i| labels[i]).collect();
            let mut best = (f64::INFINITY, FALLBACK_DEFAULT_L2);
            for l2 in FALLBACK_L2_GRID {
                let state = fit_fallback_state(model, &train_inputs, &train_labels, l2);
                let val_features: Vec<Vec<f64>> = val_idx
                    .iter()
                    .map(|&i| model.embed_owned(&state, &inputs[i]))
                    .collect();
                let loss = state.head().log_loss(&val_features, &val_labels);
                if loss < best.0 {
                    best = (loss, l2);
                }
            }
            best.1
        }
        None => FALLBACK_DEFAULT_L2,
    };
    let all: Vec<&Owned> = inputs.iter().collect();
    let state = fit_fallback_state(model, &all, labels, l2);
    if let TrainedState::Fallback { vectorizer, .. } = &state {
        model.config.embedding_dim = vectorizer.vocabulary_size();
    }
    state
}

fn train_encoder(
    model: &ClassifierModel,
    inputs: &[Owned],
    labels: &[bool],
    split: Option<&(Vec<usize>, Vec<usize>)>,
    config: &TrainingConfig,
) -> TrainedState {
    let dim = model.config.embedding_dim;
    let placeholder = TrainedState::Encoder {
        epochs_run: 0,
        head: SoftmaxHead::zeros(dim),
    };
    let features: Vec<Vec<f64>> = inputs
        .iter()
        .map(|i| model.embed_owned(&placeholder, i))
        .collect();
    let schedule = SgdSchedule {
        epochs: config.epochs,
        batch_size: config.batch_size,
        learning_rate: config.learning_rate,
        seed: config.seed,
    };
    let (head, epochs_run) = match split {
        Some((train_idx, val_idx)) => {
            let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<bool>) {
                (
                    idx.iter().map(|&i| features[i].clone()).collect(),
                    idx.iter().map(|&i| labels[i]).collect(),
                )
            };
            let (tx, ty) = pick(train_idx);
            let (vx, vy) = pick(val_idx);
            SoftmaxHead::fit_sgd((&tx, &ty), Some((&vx, &vy)), dim, schedule)
        }
        None => SoftmaxHead::fit_sgd((&features, labels), None, dim, schedule),
    };
    TrainedState::Encoder { epochs_run, head }
}

impl ClassifierModel {
    fn embed_owned(&self, state: &TrainedState, input: &Owned) -> Vec<f64> {
        match input {
            Owned::Text(text) => self.embed_text(state, text),
            Owned::Patch(changes) => self.embed_patch(state, changes),
        }
    }
}
