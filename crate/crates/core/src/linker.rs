//! Commit-to-issue link recovery.
//!
//! Commits and issues are reduced to two term channels: natural-language
//! terms and identifier-like code terms. Each channel gets its own TF-IDF
//! model fitted on the issue corpus. A commit's similarity to an issue is the
//! larger of the two channel cosines, and a commit without an explicit issue
//! is linked to its most similar issue only when that similarity exceeds the
//! configured threshold.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{CommitRecord, IssueReport};
use crate::tfidf::{cosine, SparseVector, TermChannel, TermCounts, TfidfModel};

pub const LINKER_FORMAT: &str = "vfdetect-linker";
pub const LINKER_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 0.5;

const STOPWORDS: &[&str] = &[
    "a",
    "about",
    "above",
    "after",
    "again",
    "against",
    "all",
    "also",
    "am",
    "an",
    "and",
    "any",
    "are",
    "as",
    "at",
    "be",
    "because",
    "been",
    "before",
    "being",
    "below",
    "between",
    "both",
    "but",
    "by",
    "can",
    "could",
    "did",
    "do",
    "does",
    "doing",
    "down",
    "during",
    "each",
    "few",
    "for",
    "from",
    "further",
    "had",
    "has",
    "have",
    "having",
    "he",
    "her",
    "here",
    "hers",
    "herself",
    "him",
    "himself",
    "his",
    "how",
    "i",
    "if",
    "in",
    "into",
    "is",
    "it",
    "its",
    "itself",
    "just",
    "me",
    "more",
    "most",
    "my",
    "myself",
    "no",
    "nor",
    "not",
    "now",
    "of",
    "off",
    "on",
    "once",
    "only",
    "or",
    "other",
    "our",
    "ours",
    "ourselves",
    "out",
    "over",
    "own",
    "same",
    "she",
    "should",
    "so",
    "some",
    "such",
    "than",
    "that",
    "the",
    "their",
    "theirs",
    "them",
    "themselves",
    "then",
    "there",
    "these",
    "they",
    "this",
    "those",
    "through",
    "to",
    "too",
    "under",
    "until",
    "up",
    "very",
    "was",
    "we",
    "were",
    "what",
    "when",
    "where",
    "which",
    "while",
    "who",
    "whom",
    "why",
    "will",
    "with",
    "would",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
];

pub fn is_stopword(word: &str) -> bool {
    STOPWORDS.binary_search(&word).is_ok()
}

/// Terms of one document, split into disjoint channels.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermProfile {
    pub nl_terms: TermCounts,
    pub code_terms: TermCounts,
}

impl TermProfile {
    pub fn is_empty(&self) -> bool {
        self.nl_terms.is_empty() && self.code_terms.is_empty()
    }

    pub fn channel(&self, channel: TermChannel) -> &TermCounts {
        match channel {
            TermChannel::Code => &self.code_terms,
            TermChannel::Nl | TermChannel::Tokens => &self.nl_terms,
        }
    }
}

/// Splits text into natural-language and code terms.
///
/// Text is first cut at every character other than alphanumerics, `_`, `.`,
/// `(` and `)`. A piece containing `(` contributes its prefix as a call name
/// (a code term) and the remainder is processed as its own piece. A piece is
/// a code term if it has a lower-to-upper camelCase boundary, an underscore,
/// or is a dotted path of identifiers; code terms keep their case. Every
/// other piece contributes its alphabetic runs of two or more letters,
/// lowercased, minus stopwords.
pub fn extract_terms(text: &str) -> TermProfile {
    let mut profile = TermProfile::default();
    let pieces = text.split(|c: char| !(c.is_alphanumeric() || matches!(c, '_' | '.' | '(' | ')')));
    for piece in pieces {
        route_piece(piece, &mut profile);
    }
    profile
}

fn route_piece(piece: &str, profile: &mut TermProfile) {
    let mut rest = piece;
    while let Some(open) = rest.find('(') {
        let name = trim_piece(&rest[..open]);
        if is_identifier(name) || is_dotted_path(name) {
            *profile.code_terms.entry(name.to_string()).or_default() += 1;
        } else {
            route_word(name, profile);
        }
        rest = &rest[open + 1..];
    }
    route_word(trim_piece(rest), profile);
}

fn route_word(word: &str, profile: &mut TermProfile) {
    if word.is_empty() {
        return;
    }
    if is_code_like(word) {
        *profile.code_terms.entry(word.to_string()).or_default() += 1;
        return;
    }
    for run in word.split(|c: char| !c.is_alphabetic()) {
        if run.chars().count() < 2 {
            continue;
        }
        let lower = run.to_lowercase();
        if !is_stopword(&lower) {
            *profile.nl_terms.entry(lower).or_default() += 1;
        }
    }
}

fn trim_piece(s: &str) -> &str {
    s.trim_matches(|c: char| matches!(c, '.' | ')' | '('))
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' => chars.all(|c| c.is_alphanumeric() || c == '_'),
        _ => false,
    }
}

fn is_dotted_path(s: &str) -> bool {
    let mut parts = 0;
    for part in s.split('.') {
        if !is_identifier(part) {
            return false;
        }
        parts += 1;
    }
    parts >= 2
}

fn has_camel_boundary(s: &str) -> bool {
    let chars: Vec<char> = s.chars().collect();
    chars
        .windows(2)
        .any(|w| w[0].is_lowercase() && w[1].is_uppercase())
}

fn is_code_like(word: &str) -> bool {
    if word.contains(')') {
        return false;
    }
    let identifier_like = is_identifier(word) || is_dotted_path(word);
    identifier_like
        && (has_camel_boundary(word)
            || (word.contains('_') && word.chars().any(char::is_alphanumeric))
            || is_dotted_path(word))
}

/// Fits the TF-IDF model for one linker channel.
pub fn fit_tfidf(documents: &[TermProfile], channel: TermChannel) -> Result<TfidfModel> {
    TfidfModel::fit(documents.iter().map(|p| p.channel(channel)), channel)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkerConfig {
    pub similarity_threshold: f64,
}

impl Default for LinkerConfig {
    fn default() -> Self {
        Self {
            similarity_threshold: DEFAULT_SIMILARITY_THRESHOLD,
        }
    }
}

impl LinkerConfig {
    pub fn new(similarity_threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&similarity_threshold) {
            return Err(Error::InvalidConfig(format!(
                "similarity threshold {similarity_threshold} outside [0, 1]"
            )));
        }
        Ok(Self {
            similarity_threshold,
        })
    }
}

/// An indexed issue corpus. Immutable after [`LinkerIndex::build`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkerIndex {
    config: LinkerConfig,
    nl_model: TfidfModel,
    code_model: TfidfModel,
    issues: Vec<IssueReport>,
    nl_vectors: Vec<SparseVector>,
    code_vectors: Vec<SparseVector>,
}

/// A commit's vectors in both channels, reusable across issues.
#[derive(Debug, Clone, PartialEq)]
pub struct CommitVectors {
    nl: SparseVector,
    code: SparseVector,
}

impl LinkerIndex {
    pub fn build(issues: Vec<IssueReport>, config: LinkerConfig) -> Result<Self> {
        LinkerConfig::new(config.similarity_threshold)?;
        if issues.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let profiles: Vec<TermProfile> = issues
            .iter()
            .map(|i| extract_terms(&i.linker_text()))
            .collect();
        let nl_model = fit_tfidf(&profiles, TermChannel::Nl)?;
        let code_model = fit_tfidf(&profiles, TermChannel::Code)?;
        let nl_vectors = profiles
            .iter()
            .map(|p| nl_model.vectorize(&p.nl_terms))
            .collect();
        let code_vectors = profiles
            .iter()
            .map(|p| code_model.vectorize(&p.code_terms))
            .collect();
        Ok(Self {
            config,
            nl_model,
            code_model,
            issues,
            nl_vectors,
            code_vectors,
        })
    }

    pub fn issues(&self) -> &[IssueReport] {
        &self.issues
    }

    pub fn len(&self) -> usize {
        self.issues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn config(&self) -> LinkerConfig {
        self.config
    }

    pub fn nl_model(&self) -> &TfidfModel {
        &self.nl_model
    }

    pub fn code_model(&self) -> &TfidfModel {
        &self.code_model
    }

    /// Same corpus and vectors under a different threshold.
    pub fn with_threshold(&self, similarity_threshold: f64) -> Result<Self> {
        let config = LinkerConfig::new(similarity_threshold)?;
        Ok(Self {
            config,
            ..self.clone()
        })
    }

    pub fn vectorize(&self, profile: &TermProfile) -> CommitVectors {
        CommitVectors {
            nl: self.nl_model.vectorize(&profile.nl_terms),
            code: self.code_model.vectorize(&profile.code_terms),
        }
    }

    /// `max(nl cosine, code cosine)` between a commit profile and one issue.
    pub fn similarity(&self, commit_profile: &TermProfile, issue_position: usize) -> Result<f64> {
        self.similarity_vectors(&self.vectorize(commit_profile), issue_position)
    }

    pub fn similarity_vectors(&self, commit: &CommitVectors, issue_position: usize) -> Result<f64> {
        if issue_position >= self.issues.len() {
            return Err(Error::IssueOutOfRange {
                position: issue_position,
                len: self.issues.len(),
            });
        }
        let nl = cosine(&commit.nl, &self.nl_vectors[issue_position]);
        let code = cosine(&commit.code, &self.code_vectors[issue_position]);
        Ok(nl.max(code))
    }

    /// Best-matching issue position and its similarity; ties go to the
    /// lowest position. `None` for an empty corpus.
    pub fn best_match(&self, commit_profile: &TermProfile) -> Option<(usize, f64)> {
        let vectors = self.vectorize(commit_profile);
        let mut best: Option<(usize, f64)> = None;
        for position in 0..self.issues.len() {
            let score = self
                .similarity_vectors(&vectors, position)
                .expect("position is in range");
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((position, score));
            }
        }
        best
    }

    /// Recovers an issue for a commit that has none. Returns the position of
    /// the linked issue, or `None` when no similarity exceeds the threshold.
    pub fn link_position(&self, commit: &CommitRecord) -> Result<Option<usize>> {
        if commit.issue.is_some() {
            return Err(Error::ExplicitIssue(commit.id.clone()));
        }
        let profile = extract_terms(&commit.linker_text());
        Ok(self
            .best_match(&profile)
            .filter(|&(_, score)| score > self.config.similarity_threshold)
            .map(|(position, _)| position))
    }

    pub fn link_commit(&self, commit: &CommitRecord) -> Result<Option<&IssueReport>> {
        Ok(self.link_position(commit)?.map(|p| &self.issues[p]))
    }

    /// Writes the index as versioned JSON. Output is byte-identical for
    /// identical indexes.
    pub fn persist(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let artifact = PersistedLinker {
            format: LINKER_FORMAT.to_string(),
            format_version: LINKER_FORMAT_VERSION,
            index: self.clone(),
        };
        let bytes = serde_json::to_vec_pretty(&artifact)?;
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(&bytes).map_err(|e| Error::io(path, e))?;
        file.write_all(b"\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let corrupt = |message: String| Error::CorruptArtifact {
            artifact: "linker",
            path: path.to_path_buf(),
            message,
        };

        let header: VersionHeader = serde_json::from_slice(&bytes).map_err(|e| {
            corrupt(format!(
                "{e} (expected {LINKER_FORMAT} format version {LINKER_FORMAT_VERSION})"
            ))
        })?;
        if header.format.as_deref() != Some(LINKER_FORMAT) {
            return Err(corrupt(format!(
                "not a {LINKER_FORMAT} file (expected format version {LINKER_FORMAT_VERSION})"
            )));
        }
        match header.format_version {
            Some(LINKER_FORMAT_VERSION) => {}
            found => {
                return Err(Error::FormatVersion {
                    artifact: "linker",
                    expected: LINKER_FORMAT_VERSION,
                    found: found.unwrap_or(0),
                })
            }
        }

        let artifact: PersistedLinker =
            serde_json::from_slice(&bytes).map_err(|e| corrupt(e.to_string()))?;
        artifact.index.check_consistency().map_err(corrupt)?;
        Ok(artifact.index)
    }

    fn check_consistency(&self) -> std::result::Result<(), String> {
        self.nl_model.check_consistency()?;
        self.code_model.check_consistency()?;
        if self.nl_vectors.len() != self.issues.len()
            || self.code_vectors.len() != self.issues.len()
        {
            return Err("vector lists are not aligned with issues".into());
        }
        LinkerConfig::new(self.config.similarity_threshold).map_err(|e| e.to_string())?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct PersistedLinker {
    format: String,
    format_version: u32,
    index: LinkerIndex,
}

#[derive(Deserialize)]
struct VersionHeader {
    format: Option<String>,
    format_version: Option<u32>,
}

/// Loads a corpus directory: every `*.json` file holds one issue object
/// (`title`, `body`, optional `comments`). Files are read in name order.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Vec<IssueReport>> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(Error::CorpusNotFound(dir.to_path_buf()));
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();

    let mut issues = Vec::with_capacity(paths.len());
    for path in paths {
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let issue: IssueReport =
            serde_json::from_str(&text).map_err(|e| Error::CorruptArtifact {
                artifact: "issue",
                path: path.clone(),
                message: e.to_string(),
            })?;
        if !issue.is_usable() {
            log::warn!("{}: issue has empty title and body", path.display());
        }
        issues.push(issue);
    }
    if issues.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(issues)
}
