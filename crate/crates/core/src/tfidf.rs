//! Smoothed TF-IDF over term bags, and sparse vectors with cosine similarity.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A multiset of terms, keyed in lexicographic order.
pub type TermCounts = BTreeMap<String, usize>;

pub fn count_terms<I, S>(terms: I) -> TermCounts
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let mut counts = TermCounts::new();
    for term in terms {
        *counts.entry(term.into()).or_default() += 1;
    }
    counts
}

/// Which term channel a model was fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermChannel {
    /// Natural-language terms (linker).
    Nl,
    /// Identifier-like code terms (linker).
    Code,
    /// Plain token bags (bag-of-words classifiers).
    Tokens,
}

/// Sparse vector with entries sorted by strictly increasing index.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Builds a vector from (index, value) pairs; indices must be unique.
    pub fn from_entries(mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_by_key(|&(i, _)| i);
        entries.retain(|&(_, v)| v != 0.0);
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        Self { entries }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (
            self.entries.iter().peekable(),
            other.entries.iter().peekable(),
        );
        let mut sum = 0.0;
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    sum += x * y;
                    a.next();
                    b.next();
                }
            }
        }
        sum
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }
}

/// Cosine similarity, defined as 0 when either vector is zero. Clamped to
/// [0, 1] since TF-IDF weights are non-negative.
pub fn cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (a.dot(b) / (na * nb)).clamp(0.0, 1.0)
}

/// Fitted vocabulary and inverse document frequencies for one channel.
/// Immutable once fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    channel: TermChannel,
    document_count: usize,
    vocabulary: BTreeMap<String, usize>,
    idf: Vec<f64>,
}

impl TfidfModel {
    /// Fits on a non-empty document collection with
    /// `idf(t) = ln((1 + N) / (1 + df(t))) + 1`.
    pub fn fit<'a, I>(documents: I, channel: TermChannel) -> Result<Self>
    where
        I: IntoIterator<Item = &'a TermCounts>,
    {
        let mut document_frequency: BTreeMap<&str, usize> = BTreeMap::new();
        let mut document_count = 0usize;
        for doc in documents {
            document_count += 1;
            for term in doc.keys() {
                *document_frequency.entry(term.as_str()).or_default() += 1;
            }
        }
        if document_count == 0 {
            return Err(Error::EmptyCorpus);
        }

        let n = document_count as f64;
        let mut vocabulary = BTreeMap::new();
        let mut idf = Vec::with_capacity(document_frequency.len());
        for (index, (term, df)) in document_frequency.into_iter().enumerate() {
            vocabulary.insert(term.to_string(), index);
            idf.push(((1.0 + n) / (1.0 + df as f64)).ln() + 1.0);
        }
        Ok(Self {
            channel,
            document_count,
            vocabulary,
            idf,
        })
    }

    /// Raw term frequency times idf over in-vocabulary terms, L2-normalized
    /// when nonzero.
    pub fn vectorize(&self, terms: &TermCounts) -> SparseVector {
        let entries: Vec<(usize, f64)> = terms
            .iter()
            .filter_map(|(term, &tf)| {
                let index = *self.vocabulary.get(term)?;
                Some((index, tf as f64 * self.idf[index]))
            })
            .collect();
        let mut v = SparseVector::from_entries(entries);
        let norm = v.norm();
        if norm > 0.0 {
            for (_, x) in &mut v.entries {
                *x /= norm;
            }
        }
        v
    }

    pub fn channel(&self) -> TermChannel {
        self.channel
    }

    pub fn document_count(&self) -> usize {
        self.document_count
    }

    pub fn vocabulary_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.vocabulary.get(term).map(|&i| self.idf[i])
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.vocabulary.get(term).copied()
    }

    pub(crate) fn check_consistency(&self) -> std::result::Result<(), String> {
        if self.idf.len() != self.vocabulary.len() {
            return Err(format!(
                "{} idf weights for {} vocabulary terms",
                self.idf.len(),
                self.vocabulary.len()
            ));
        }
        if self.vocabulary.values().any(|&i| i >= self.idf.len()) {
            return Err("vocabulary index out of range".into());
        }
        Ok(())
    }
}
