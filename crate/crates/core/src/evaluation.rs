//! Dataset splitting, precision/recall/F1, and the unique-true-positive
//! ablation over base classifiers.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::LabeledDataset;

/// Stratified partition of record positions into (first, second), with
/// `first_fraction` of each class in `first`. Each side is sorted. Every
/// class needs at least two records so that both sides receive one.
pub fn stratified_partition(
    labels: &[bool],
    first_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(first_fraction > 0.0 && first_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "split fraction {first_fraction} outside (0, 1)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut first = Vec::new();
    let mut second = Vec::new();
    for class in [true, false] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < 2 {
            return Err(Error::DegenerateLabels(format!(
                "{} class has {} record(s); stratified splitting needs at least 2",
                if class { "positive" } else { "negative" },
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let take =
            ((members.len() as f64 * first_fraction).round() as usize).clamp(1, members.len() - 1);
        first.extend_from_slice(&members[..take]);
        second.extend_from_slice(&members[take..]);
    }
    first.sort_unstable();
    second.sort_unstable();
    Ok((first, second))
}

/// Seeded stratified train/test split. Records keep their input order.
pub fn split_dataset(
    data: &LabeledDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let labels: Vec<bool> = data.labels().collect();
    let (train_idx, test_idx) = stratified_partition(&labels, train_fraction, seed)?;
    let pick = |idx: &[usize]| {
        LabeledDataset::new(idx.iter().map(|&i| data.records()[i].clone()).collect())
    };
    Ok((pick(&train_idx)?, pick(&test_idx)?))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    /// Precision, recall and F1, each 0 when its denominator is 0.
    pub fn report(&self) -> MetricsReport {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * (precision * recall) / (precision + recall)
        };
        MetricsReport {
            precision,
            recall,
            f1,
            confusion: *self,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: ConfusionMatrix,
}

/// Compares predictions with ground truth over the same id set.
pub fn compute_metrics(
    predictions: &[(String, bool)],
    labels: &[(String, bool)],
) -> Result<MetricsReport> {
    let mut truth: HashMap<&str, bool> = HashMap::with_capacity(labels.len());
    for (id, label) in labels {
        if truth.insert(id.as_str(), *label).is_some() {
            return Err(Error::MismatchedIds(format!("duplicate label id {id:?}")));
        }
    }
    if predictions.len() != labels.len() {
        return Err(Error::MismatchedIds(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let mut matrix = ConfusionMatrix::default();
    let mut seen = BTreeSet::new();
    for (id, predicted) in predictions {
        let Some(&actual) = truth.get(id.as_str()) else {
            return Err(Error::MismatchedIds(format!(
                "prediction id {id:?} has no label"
            )));
        };
        if !seen.insert(id.as_str()) {
            return Err(Error::MismatchedIds(format!(
                "duplicate prediction id {id:?}"
            )));
        }
        matrix.record(*predicted, actual);
    }
    Ok(matrix.report())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationReport {
    pub true_positives: BTreeMap<String, BTreeSet<String>>,
    /// Commits found by this classifier and by no other.
    pub uniques: BTreeMap<String, usize>,
    /// Size of the union of all true-positive sets.
    pub total_discovered: usize,
}

pub fn ablation_unique_tp(tp_sets: &BTreeMap<String, BTreeSet<String>>) -> AblationReport {
    let mut owners: HashMap<&str, usize> = HashMap::new();
    for set in tp_sets.values() {
        for id in set {
            *owners.entry(id.as_str()).or_default() += 1;
        }
    }
    let uniques = tp_sets
        .iter()
        .map(|(name, set)| {
            let unique = set.iter().filter(|id| owners[id.as_str()] == 1).count();
            (name.clone(), unique)
        })
        .collect();
    AblationReport {
        true_positives: tp_sets.clone(),
        uniques,
        total_discovered: owners.len(),
    }
}

/// Per-classifier and ensemble scores on one test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub message: MetricsReport,
    pub issue: MetricsReport,
    pub patch: MetricsReport,
    pub ensemble: MetricsReport,
    pub ablation: AblationReport,
    pub train_size: usize,
    pub test_size: usize,
}

impl EvaluationReport {
    /// F1 table with one row per model: Message, Issue, Patch, Ensemble.
    pub fn render_table(&self, model_name: &str) -> String {
        let mut out = String::new();
        out.push_str("| Model | Message | Issue | Patch | Ensemble |\n");
        out.push_str("|-------|---------|-------|-------|----------|\n");
        out.push_str(&format!(
            "| {model_name} | {:.2} | {:.2} | {:.2} | {:.2} |\n",
            self.message.f1, self.issue.f1, self.patch.f1, self.ensemble.f1
        ));
        out
    }
}
