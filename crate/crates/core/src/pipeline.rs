//! End-to-end training, scoring and persistence of the full model: three
//! base classifiers plus the stacking ensemble.
//!
//! A model directory holds:
//!
//! ```text
//! manifest.json        backend, seeds, training config, fold count, ensemble
//! ensemble.json        stacker weights, bias, threshold, imputation value
//! message/             manifest.json + weights.json
//! issue/               (absent when no issue classifier could be trained)
//! patch/
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{read_json, write_json, Backend, ClassifierModel, Source, TrainingConfig};
use crate::ensemble::{
    assemble_features, classify_with_threshold, resolve_issues, score_commit, train_stacker,
    BaseClassifiers, BaseTrainer, EnsembleModel, ScoredCommit, StackedFeatures, DEFAULT_FOLDS,
};
use crate::error::{Error, Result};
use crate::evaluation::{ablation_unique_tp, split_dataset, ConfusionMatrix, EvaluationReport};
use crate::ingest::{CommitRecord, LabeledDataset};
use crate::linker::LinkerIndex;

pub const MODEL_FORMAT: &str = "vfdetect-models";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    pub backend: Backend,
    pub training: TrainingConfig,
    pub folds: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            backend: Backend::Fallback,
            training: TrainingConfig::default(),
            folds: DEFAULT_FOLDS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub format: String,
    pub format_version: u32,
    pub backend: Backend,
    pub seed: u64,
    pub training: TrainingConfig,
    /// How the stacker saw base probabilities.
    pub stacker_protocol: String,
    pub folds: usize,
    pub classifiers: BTreeMap<String, Option<String>>,
    pub ensemble: EnsembleModel,
    pub training_records: usize,
    pub positive_records: usize,
}

#[derive(Serialize, Deserialize)]
struct EnsembleArtifact {
    format_version: u32,
    ensemble: EnsembleModel,
}

/// A trained model: base classifiers plus stacker.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedPipeline {
    pub classifiers: BaseClassifiers,
    pub ensemble: EnsembleModel,
    pub manifest: ModelManifest,
}

pub fn train_pipeline(
    data: &LabeledDataset,
    options: &PipelineOptions,
    linker: Option<&LinkerIndex>,
) -> Result<TrainedPipeline> {
    data.require_both_classes()?;
    options.training.validate()?;
    let trainer = BaseTrainer {
        backend: options.backend,
        config: options.training,
    };
    let ensemble = train_stacker(data, &trainer, linker, options.folds)?;
    let resolved = LabeledDataset::new(resolve_issues(data.records(), linker)?)?;
    let classifiers = trainer.train(&resolved)?;

    let mut names = BTreeMap::new();
    names.insert(
        Source::Message.name().to_string(),
        Some(Source::Message.name().to_string()),
    );
    names.insert(
        Source::Issue.name().to_string(),
        classifiers
            .issue
            .as_ref()
            .map(|_| Source::Issue.name().to_string()),
    );
    names.insert(
        Source::Patch.name().to_string(),
        Some(Source::Patch.name().to_string()),
    );
    let manifest = ModelManifest {
        format: MODEL_FORMAT.to_string(),
        format_version: MODEL_FORMAT_VERSION,
        backend: options.backend,
        seed: options.training.seed,
        training: options.training,
        stacker_protocol: "out_of_fold".to_string(),
        folds: options.folds,
        classifiers: names,
        ensemble,
        training_records: data.len(),
        positive_records: data.positive_count(),
    };
    Ok(TrainedPipeline {
        classifiers,
        ensemble,
        manifest,
    })
}

impl TrainedPipeline {
    pub fn features(
        &self,
        commit: &CommitRecord,
        linker: Option<&LinkerIndex>,
    ) -> Result<StackedFeatures> {
        assemble_features(
            commit,
            &self.classifiers,
            linker,
            self.ensemble.issue_imputation_value,
        )
    }

    /// Final probability and flag for every commit, in input order.
    /// Commits are scored in parallel; results do not depend on scheduling.
    pub fn score_commits(
        &self,
        commits: &[CommitRecord],
        linker: Option<&LinkerIndex>,
    ) -> Result<Vec<ScoredCommit>> {
        commits
            .par_iter()
            .map(|commit| {
                let features = self.features(commit, linker)?;
                let probability = score_commit(&self.ensemble, &features);
                Ok(ScoredCommit {
                    id: commit.id.clone(),
                    probability,
                    flagged: classify_with_threshold(probability, self.ensemble.threshold),
                })
            })
            .collect()
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        self.ensemble = self.ensemble.with_threshold(threshold)?;
        Ok(self)
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.classifiers
            .message
            .save(dir.join(Source::Message.name()))?;
        self.classifiers
            .patch
            .save(dir.join(Source::Patch.name()))?;
        let issue_dir = dir.join(Source::Issue.name());
        match &self.classifiers.issue {
            Some(model) => model.save(&issue_dir)?,
            None if issue_dir.exists() => {
                fs::remove_dir_all(&issue_dir).map_err(|e| Error::io(&issue_dir, e))?
            }
            None => {}
        }
        write_json(
            &dir.join("ensemble.json"),
            &EnsembleArtifact {
                format_version: MODEL_FORMAT_VERSION,
                ensemble: self.ensemble,
            },
        )?;
        write_json(&dir.join("manifest.json"), &self.manifest)
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        if !dir.is_dir() {
            return Err(Error::io(
                dir,
                std::io::Error::new(std::io::ErrorKind::NotFound, "model directory not found"),
            ));
        }
        let manifest: ModelManifest = read_json(&dir.join("manifest.json"), "model manifest")?;
        if manifest.format != MODEL_FORMAT || manifest.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                artifact: "model manifest",
                expected: MODEL_FORMAT_VERSION,
                found: manifest.format_version,
            });
        }
        let artifact: EnsembleArtifact = read_json(&dir.join("ensemble.json"), "ensemble")?;
        if artifact.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                artifact: "ensemble",
                expected: MODEL_FORMAT_VERSION,
                found: artifact.format_version,
            });
        }
        artifact.ensemble.validate()?;
        if artifact.ensemble != manifest.ensemble {
            return Err(Error::CorruptArtifact {
                artifact: "ensemble",
                path: dir.join("ensemble.json"),
                message: "ensemble does not match the model manifest".into(),
            });
        }

        let load_source = |source: Source| -> Result<ClassifierModel> {
            let model = ClassifierModel::load(dir.join(source.name()))?;
            if model.source() != source || !model.is_trained() {
                return Err(Error::CorruptArtifact {
                    artifact: "classifier",
                    path: dir.join(source.name()),
                    message: format!("expected a trained {source} classifier"),
                });
            }
            Ok(model)
        };
        let has_issue = manifest
            .classifiers
            .get(Source::Issue.name())
            .is_some_and(Option::is_some);
        let classifiers = BaseClassifiers {
            message: load_source(Source::Message)?,
            issue: if has_issue {
                Some(load_source(Source::Issue)?)
            } else {
                None
            },
            patch: load_source(Source::Patch)?,
        };
        Ok(Self {
            classifiers,
            ensemble: artifact.ensemble,
            manifest,
        })
    }
}

/// Splits `data`, trains on the training part and reports per-classifier
/// and ensemble metrics plus the unique-true-positive ablation on the test
/// part. Base classifiers are thresholded at the ensemble threshold.
pub fn evaluate_pipeline(
    data: &LabeledDataset,
    options: &PipelineOptions,
    linker: Option<&LinkerIndex>,
    train_fraction: f64,
    split_seed: u64,
) -> Result<(TrainedPipeline, EvaluationReport)> {
    let (train, test) = split_dataset(data, train_fraction, split_seed)?;
    let pipeline = train_pipeline(&train, options, linker)?;
    let threshold = pipeline.ensemble.threshold;

    let features: Vec<StackedFeatures> = test
        .records()
        .par_iter()
        .map(|r| pipeline.features(r, linker))
        .collect::<Result<_>>()?;

    let mut matrices = [ConfusionMatrix::default(); 4];
    let mut tp_sets: BTreeMap<String, BTreeSet<String>> = Source::ALL
        .iter()
        .map(|s| (s.name().to_string(), BTreeSet::new()))
        .collect();
    for (record, f) in test.records().iter().zip(&features) {
        let actual = record.label == Some(true);
        let scores = [
            f.p_message,
            f.p_issue,
            f.p_patch,
            score_commit(&pipeline.ensemble, f),
        ];
        for (k, score) in scores.into_iter().enumerate() {
            let predicted = classify_with_threshold(score, threshold);
            matrices[k].record(predicted, actual);
            if k < 3 && predicted && actual {
                tp_sets
                    .get_mut(Source::ALL[k].name())
                    .expect("every source has a set")
                    .insert(record.id.clone());
            }
        }
    }

    let report = EvaluationReport {
        message: matrices[0].report(),
        issue: matrices[1].report(),
        patch: matrices[2].report(),
        ensemble: matrices[3].report(),
        ablation: ablation_unique_tp(&tp_sets),
        train_size: train.len(),
        test_size: test.len(),
    };
    Ok((pipeline, report))
}
