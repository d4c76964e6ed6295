//! Stacking ensemble: a logistic regression over the message, issue and
//! patch probabilities, trained on out-of-fold base predictions.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{train_classifier, Backend, ClassifierModel, Source, TrainingConfig};
use crate::error::{Error, Result};
use crate::ingest::{CommitRecord, IssueReport, LabeledDataset};
use crate::linker::LinkerIndex;
use crate::optim::{fit_logistic, sigmoid, MinimizeOptions};

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_FOLDS: usize = 5;
/// L2 penalty of the stacker's logistic regression (bias unpenalized).
pub const STACKER_L2: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StackedFeatures {
    pub p_message: f64,
    pub p_issue: f64,
    pub p_patch: f64,
    /// `p_issue` is the imputation value: no explicit or linked issue.
    pub issue_imputed: bool,
}

impl StackedFeatures {
    pub fn as_array(&self) -> [f64; 3] {
        [self.p_message, self.p_issue, self.p_patch]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub weights: [f64; 3],
    pub bias: f64,
    pub threshold: f64,
    pub issue_imputation_value: f64,
    pub folds: usize,
}

impl EnsembleModel {
    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        check_unit("threshold", threshold)?;
        self.threshold = threshold;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("threshold", self.threshold)?;
        check_unit("issue imputation value", self.issue_imputation_value)?;
        if !self
            .weights
            .iter()
            .chain([&self.bias])
            .all(|w| w.is_finite())
        {
            return Err(Error::InvalidConfig("non-finite ensemble weights".into()));
        }
        Ok(())
    }
}

fn check_unit(what: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "{what} {value} outside [0, 1]"
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCommit {
    pub id: String,
    pub probability: f64,
    pub flagged: bool,
}

/// The three base classifiers. The issue classifier is absent when the
/// training data held no usable two-class issue subset; every commit then
/// takes the imputation value.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseClassifiers {
    pub message: ClassifierModel,
    pub issue: Option<ClassifierModel>,
    pub patch: ClassifierModel,
}

/// How base classifiers are (re)trained, both for the final model and for
/// each stacking fold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseTrainer {
    pub backend: Backend,
    pub config: TrainingConfig,
}

impl BaseTrainer {
    /// Trains all three classifiers. `data` must already carry resolved
    /// issues (see [`resolve_issues`]).
    pub fn train(&self, data: &LabeledDataset) -> Result<BaseClassifiers> {
        let message = train_classifier(data, Source::Message, self.backend, &self.config)?;
        let patch = train_classifier(data, Source::Patch, self.backend, &self.config)?;
        let issue = match train_classifier(data, Source::Issue, self.backend, &self.config) {
            Ok(model) => Some(model),
            Err(Error::DegenerateLabels(reason)) => {
                log::warn!(
                    "issue classifier not trained ({reason}); issue probabilities will be imputed"
                );
                None
            }
            Err(e) => return Err(e),
        };
        Ok(BaseClassifiers {
            message,
            issue,
            patch,
        })
    }
}

/// The issue a commit is classified with: its explicit issue, else the
/// linker's recovered issue, else none.
pub fn resolve_issue<'a>(
    commit: &'a CommitRecord,
    linker: Option<&'a LinkerIndex>,
) -> Result<Option<&'a IssueReport>> {
    if let Some(issue) = &commit.issue {
        return Ok(Some(issue));
    }
    match linker {
        Some(index) => index.link_commit(commit),
        None => Ok(None),
    }
}

/// Copies of `records` with recovered links filled in. Explicit issues are
/// kept verbatim.
pub fn resolve_issues(
    records: &[CommitRecord],
    linker: Option<&LinkerIndex>,
) -> Result<Vec<CommitRecord>> {
    records
        .iter()
        .map(|r| {
            let issue = resolve_issue(r, linker)?.cloned();
            Ok(CommitRecord { issue, ..r.clone() })
        })
        .collect()
}

pub fn assemble_features(
    commit: &CommitRecord,
    models: &BaseClassifiers,
    linker: Option<&LinkerIndex>,
    imputation_value: f64,
) -> Result<StackedFeatures> {
    let p_message = models.message.classify_text(&commit.message)?;
    let p_patch = models.patch.classify_patch(&commit.patch)?;
    let issue = resolve_issue(commit, linker)?;
    let (p_issue, issue_imputed) = match (issue, &models.issue) {
        (Some(issue), Some(model)) => (model.classify_text(&issue.classifier_text())?, false),
        _ => (imputation_value, true),
    };
    Ok(StackedFeatures {
        p_message,
        p_issue,
        p_patch,
        issue_imputed,
    })
}

/// Fits the stacker's logistic regression on already-assembled features.
pub fn fit_stacker(features: &[StackedFeatures], labels: &[bool]) -> Result<([f64; 3], f64)> {
    if features.len() != labels.len() {
        return Err(Error::InvalidConfig(
            "features and labels differ in length".into(),
        ));
    }
    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::DegenerateLabels(format!(
            "stacker: {positives} positive of {} records",
            labels.len()
        )));
    }
    let rows: Vec<Vec<f64>> = features.iter().map(|f| f.as_array().to_vec()).collect();
    let options = MinimizeOptions {
        max_iterations: 50_000,
        gradient_tolerance: 1e-11,
    };
    let fit = fit_logistic(&rows, labels, STACKER_L2, options);
    Ok(([fit.weights[0], fit.weights[1], fit.weights[2]], fit.bias))
}

/// Stratified fold assignment: each class is shuffled and dealt round-robin.
pub fn fold_assignment(labels: &[bool], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut offset = 0;
    for class in [true, false] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for (k, &i) in members.iter().enumerate() {
            assignment[i] = (k + offset) % folds;
        }
        offset += members.len();
    }
    assignment
}

/// Trains the stacker on out-of-fold base probabilities: for each fold the
/// base classifiers are retrained on the remaining folds and score the
/// held-out records. The imputation value is the training set's positive
/// rate.
pub fn train_stacker(
    training: &LabeledDataset,
    trainer: &BaseTrainer,
    linker: Option<&LinkerIndex>,
    folds: usize,
) -> Result<EnsembleModel> {
    let (features, labels, imputation) = out_of_fold_features(training, trainer, linker, folds)?;
    let (weights, bias) = fit_stacker(&features, &labels)?;
    Ok(EnsembleModel {
        weights,
        bias,
        threshold: DEFAULT_THRESHOLD,
        issue_imputation_value: imputation,
        folds,
    })
}

/// Out-of-fold stacked features for every training record, in input order.
pub fn out_of_fold_features(
    training: &LabeledDataset,
    trainer: &BaseTrainer,
    linker: Option<&LinkerIndex>,
    folds: usize,
) -> Result<(Vec<StackedFeatures>, Vec<bool>, f64)> {
    if folds < 2 {
        return Err(Error::InvalidConfig(format!(
            "stacking needs at least 2 folds, got {folds}"
        )));
    }
    training.require_both_classes()?;
    let smaller = training.positive_count().min(training.negative_count());
    if smaller < folds {
        return Err(Error::DegenerateLabels(format!(
            "{folds}-fold stacking needs at least {folds} records per class, smaller class has {smaller}"
        )));
    }

    let resolved = resolve_issues(training.records(), linker)?;
    let labels: Vec<bool> = training.labels().collect();
    let imputation = training.positive_rate();
    let assignment = fold_assignment(&labels, folds, trainer.config.seed);

    let mut features: Vec<Option<StackedFeatures>> = vec![None; resolved.len()];
    for fold in 0..folds {
        let fit_part: Vec<CommitRecord> = resolved
            .iter()
            .zip(&assignment)
            .filter(|(_, &a)| a != fold)
            .map(|(r, _)| r.clone())
            .collect();
        let models = trainer.train(&LabeledDataset::new(fit_part)?)?;
        for (i, record) in resolved
            .iter()
            .enumerate()
            .filter(|(i, _)| assignment[*i] == fold)
        {
            features[i] = Some(assemble_features(record, &models, None, imputation)?);
        }
    }
    let features = features
        .into_iter()
        .map(|f| f.expect("every record belongs to exactly one fold"))
        .collect();
    Ok((features, labels, imputation))
}

/// `logistic(w·p + b)`, kept strictly inside (0, 1).
pub fn score_commit(ensemble: &EnsembleModel, features: &StackedFeatures) -> f64 {
    let p = features.as_array();
    let z = ensemble.weights[0] * p[0]
        + ensemble.weights[1] * p[1]
        + ensemble.weights[2] * p[2]
        + ensemble.bias;
    sigmoid(z).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Strict: a score equal to the threshold is not flagged.
pub fn classify_with_threshold(score: f64, threshold: f64) -> bool {
    score > threshold
}

/// Descending probability, ties broken by ascending id.
pub fn rank_commits(mut scored: Vec<ScoredCommit>) -> Vec<ScoredCommit> {
    scored.sort_by(|a, b| match b.probability.total_cmp(&a.probability) {
        Ordering::Equal => a.id.cmp(&b.id),
        other => other,
    });
    scored
}
