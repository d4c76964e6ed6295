//! Commit ingestion: the JSON input schema, patch normalization and record
//! validation.
//!
//! An input file is a JSON array of commit objects:
//!
//! ```json
//! [
//!   {
//!     "id": "4f1c2e",
//!     "message": "Fix buffer overflow in parseHeader()",
//!     "issue": { "title": "...", "body": "...", "comments": ["..."] },
//!     "patch": ["diff --git a/x.c b/x.c\n...", { "file_path": "y.c", "added": ["..."], "removed": ["..."] }],
//!     "label": true
//!   }
//! ]
//! ```
//!
//! `issue` and `label` are optional. Each `patch` element is either raw
//! unified-diff text or a pre-split object holding one file's added and
//! removed lines.

mod diff;

pub use diff::parse_unified_diff;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

const COMMIT_KEYS: &[&str] = &["id", "message", "issue", "patch", "label"];

/// An issue report, either explicitly linked to a commit or part of the
/// linker's corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueReport {
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub body: String,
    #[serde(default)]
    pub comments: Vec<String>,
}

impl IssueReport {
    /// Text seen by the issue classifier: title and body, comments excluded.
    pub fn classifier_text(&self) -> String {
        format!("{}\n{}", self.title, self.body)
    }

    /// Text seen by the issue linker: title, body and every comment.
    pub fn linker_text(&self) -> String {
        let mut parts = Vec::with_capacity(2 + self.comments.len());
        parts.push(self.title.as_str());
        parts.push(self.body.as_str());
        parts.extend(self.comments.iter().map(String::as_str));
        parts.join(" ")
    }

    pub fn is_usable(&self) -> bool {
        !self.title.trim().is_empty() || !self.body.trim().is_empty()
    }
}

/// The code change of a single file, with context lines dropped.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    #[serde(default)]
    pub file_path: String,
    #[serde(default, rename = "added", alias = "added_lines")]
    pub added_lines: Vec<String>,
    #[serde(default, rename = "removed", alias = "removed_lines")]
    pub removed_lines: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommitRecord {
    pub id: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub issue: Option<IssueReport>,
    pub patch: Vec<FileChange>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<bool>,
}

impl CommitRecord {
    /// Message plus every added and removed line, whitespace-joined.
    pub fn linker_text(&self) -> String {
        let mut text = self.message.clone();
        for change in &self.patch {
            for line in change.removed_lines.iter().chain(&change.added_lines) {
                text.push(' ');
                text.push_str(line);
            }
        }
        text
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PatchEntry {
    Diff(String),
    Split(FileChange),
}

#[derive(Deserialize)]
struct RawCommit {
    id: String,
    #[serde(default)]
    message: Option<String>,
    #[serde(default)]
    issue: Option<IssueReport>,
    #[serde(default)]
    patch: Option<Vec<PatchEntry>>,
    #[serde(default)]
    label: Option<bool>,
}

/// Reads and parses an input file. See [`parse_input_str`].
pub fn parse_input_file(path: impl AsRef<Path>) -> Result<Vec<CommitRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_input_str(&text, path)
}

/// Parses a JSON array of commit objects. `origin` is only used in error
/// messages.
pub fn parse_input_str(text: &str, origin: &Path) -> Result<Vec<CommitRecord>> {
    let values: Vec<Value> = serde_json::from_str(text).map_err(|e| Error::MalformedJson {
        path: origin.to_path_buf(),
        offset: byte_offset(text, e.line(), e.column()),
        message: e.to_string(),
    })?;

    values
        .into_iter()
        .enumerate()
        .map(|(index, value)| commit_from_value(index, value))
        .collect()
}

fn commit_from_value(index: usize, value: Value) -> Result<CommitRecord> {
    let invalid = |message: String| Error::InvalidRecord { index, message };
    let Value::Object(map) = &value else {
        return Err(invalid("expected a JSON object".into()));
    };
    match map.get("id") {
        None | Some(Value::Null) => return Err(invalid("missing \"id\"".into())),
        Some(Value::String(_)) => {}
        Some(_) => return Err(invalid("\"id\" must be a string".into())),
    }
    for key in map.keys() {
        if !COMMIT_KEYS.contains(&key.as_str()) {
            log::warn!("commit at index {index}: ignoring unknown key {key:?}");
        }
    }

    let raw: RawCommit = serde_json::from_value(value).map_err(|e| invalid(e.to_string()))?;
    let mut patch = Vec::new();
    for entry in raw.patch.unwrap_or_default() {
        match entry {
            PatchEntry::Diff(text) => patch.extend(parse_unified_diff(&text)),
            PatchEntry::Split(change) => patch.push(change),
        }
    }
    Ok(CommitRecord {
        id: raw.id,
        message: raw.message.unwrap_or_default(),
        issue: raw.issue,
        patch,
        label: raw.label,
    })
}

/// Serializes records back into the input schema, with patches in the
/// pre-split form.
pub fn to_input_json(records: &[CommitRecord]) -> Result<String> {
    Ok(serde_json::to_string_pretty(records)?)
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

/// Outcome of [`validate_record`]: empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Validation {
    pub violations: Vec<String>,
}

impl Validation {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_record(record: &CommitRecord, require_label: bool) -> Validation {
    let mut violations = Vec::new();
    if record.id.trim().is_empty() {
        violations.push("empty id".to_string());
    }
    if require_label && record.label.is_none() {
        violations.push("label absent".to_string());
    }
    if let Some(issue) = &record.issue {
        if !issue.is_usable() {
            violations.push("issue has empty title and body".to_string());
        }
    }
    Validation { violations }
}

/// Validates every record of one input file, including id uniqueness.
/// Violations are prefixed with the record's array index.
pub fn validate_records(records: &[CommitRecord], require_label: bool) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (index, record) in records.iter().enumerate() {
        for v in validate_record(record, require_label).violations {
            out.push(format!("commit {index}: {v}"));
        }
        if !record.id.is_empty() && !seen.insert(record.id.as_str()) {
            out.push(format!("commit {index}: duplicate id {:?}", record.id));
        }
    }
    out
}

/// Records that all carry a label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    records: Vec<CommitRecord>,
    positive_count: usize,
    negative_count: usize,
}

impl LabeledDataset {
    pub fn new(records: Vec<CommitRecord>) -> Result<Self> {
        let mut positive_count = 0;
        for (index, record) in records.iter().enumerate() {
            match record.label {
                Some(true) => positive_count += 1,
                Some(false) => {}
                None => {
                    return Err(Error::InvalidRecord {
                        index,
                        message: "label absent".into(),
                    })
                }
            }
        }
        let negative_count = records.len() - positive_count;
        Ok(Self {
            records,
            positive_count,
            negative_count,
        })
    }

    pub fn records(&self) -> &[CommitRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<CommitRecord> {
        self.records
    }

    pub fn positive_count(&self) -> usize {
        self.positive_count
    }

    pub fn negative_count(&self) -> usize {
        self.negative_count
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = bool> + '_ {
        self.records.iter().map(|r| r.label == Some(true))
    }

    /// Errors unless both classes are present.
    pub fn require_both_classes(&self) -> Result<()> {
        if self.positive_count == 0 || self.negative_count == 0 {
            return Err(Error::DegenerateLabels(format!(
                "{} positive and {} negative records",
                self.positive_count, self.negative_count
            )));
        }
        Ok(())
    }

    pub fn positive_rate(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.positive_count as f64 / self.records.len() as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<CommitRecord>> {
        parse_input_str(text, Path::new("input.json"))
    }

    #[test]
    fn full_record_with_issue() {
        let text = r#"[{
            "id": "abc123",
            "message": "Fix XSS in template rendering",
            "issue": {"title": "XSS in templates", "body": "Escaping missing", "comments": ["confirmed"]},
            "patch": [{"file_path": "t.py", "added": ["escape(x)"], "removed": ["x"]}]
        }]"#;
        let records = parse(text).unwrap();
        assert_eq!(records.len(), 1);
        let r = &records[0];
        assert_eq!(r.id, "abc123");
        let issue = r.issue.as_ref().unwrap();
        assert_eq!(issue.title, "XSS in templates");
        assert_eq!(issue.comments, vec!["confirmed"]);
        assert_eq!(r.patch[0].added_lines, vec!["escape(x)"]);
        assert_eq!(r.label, None);
    }

    #[test]
    fn missing_issue_is_absent() {
        let records = parse(r#"[{"id": "a", "message": "m", "patch": []}]"#).unwrap();
        assert!(records[0].issue.is_none());
    }

    #[test]
    fn empty_array() {
        assert!(parse("[]").unwrap().is_empty());
    }

    #[test]
    fn diff_text_patch_entries() {
        let text = r#"[{"id": "a", "message": "",
            "patch": ["--- a/f.c\n+++ b/f.c\n@@ -1 +1 @@\n-y\n+x\n"]}]"#;
        let records = parse(text).unwrap();
        assert_eq!(records[0].patch.len(), 1);
        assert_eq!(records[0].patch[0].file_path, "f.c");
        assert_eq!(records[0].patch[0].added_lines, vec!["x"]);
        assert_eq!(records[0].patch[0].removed_lines, vec!["y"]);
        assert_eq!(records[0].message, "");
    }

    #[test]
    fn malformed_json_names_offset() {
        let text = "[\n  {\"id\": \"a\",, }\n]";
        match parse(text) {
            Err(Error::MalformedJson { offset, .. }) => {
                assert_eq!(&text[offset..offset + 1], ",");
            }
            other => panic!("expected malformed JSON error, got {other:?}"),
        }
    }

    #[test]
    fn missing_id_names_index() {
        let text = r#"[{"id": "a"}, {"message": "no id"}]"#;
        match parse(text) {
            Err(Error::InvalidRecord { index, message }) => {
                assert_eq!(index, 1);
                assert!(message.contains("id"));
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_ignored() {
        let records = parse(r#"[{"id": "a", "author": "x", "message": "m"}]"#).unwrap();
        assert_eq!(records[0].message, "m");
    }

    #[test]
    fn validation_cases() {
        let record = CommitRecord {
            id: "a".into(),
            message: "m".into(),
            issue: None,
            patch: vec![],
            label: None,
        };
        assert!(validate_record(&record, false).is_ok());
        assert_eq!(
            validate_record(&record, true).violations,
            vec!["label absent".to_string()]
        );
        let empty_id = CommitRecord {
            id: String::new(),
            ..record.clone()
        };
        assert_eq!(
            validate_record(&empty_id, false).violations,
            vec!["empty id".to_string()]
        );
    }

    #[test]
    fn duplicate_ids_reported() {
        let rec = |id: &str| CommitRecord {
            id: id.into(),
            message: String::new(),
            issue: None,
            patch: vec![],
            label: Some(false),
        };
        let v = validate_records(&[rec("a"), rec("b"), rec("a")], true);
        assert_eq!(v, vec!["commit 2: duplicate id \"a\"".to_string()]);
    }

    #[test]
    fn labeled_dataset_counts() {
        let rec = |id: &str, label| CommitRecord {
            id: id.into(),
            message: String::new(),
            issue: None,
            patch: vec![],
            label,
        };
        let ds = LabeledDataset::new(vec![
            rec("a", Some(true)),
            rec("b", Some(false)),
            rec("c", Some(false)),
        ])
        .unwrap();
        assert_eq!((ds.positive_count(), ds.negative_count()), (1, 2));
        assert!(LabeledDataset::new(vec![rec("a", None)]).is_err());
        let single = LabeledDataset::new(vec![rec("a", Some(true))]).unwrap();
        assert!(matches!(
            single.require_both_classes(),
            Err(Error::DegenerateLabels(_))
        ));
    }
}
