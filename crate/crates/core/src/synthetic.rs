//! Seeded generator of labeled commits for smoke tests and demos.
//!
//! Vulnerability-fixing commits carry a planted vocabulary in their message,
//! their issue and their diff; the rest are drawn from maintenance
//! vocabulary. Negatives are sampled at a fixed ratio per positive. Some
//! commits carry an explicit issue; for part of the remainder the generated
//! issue corpus holds a matching report that shares a unique identifier with
//! the commit, so link recovery has something to find.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::{CommitRecord, FileChange, IssueReport};

const VULN_MESSAGE: &[&str] = &[
    "overflow",
    "cve",
    "vulnerability",
    "sanitize",
    "injection",
    "xss",
    "exploit",
    "unsafe",
];
const VULN_ISSUE: &[&str] = &[
    "security",
    "attacker",
    "crash",
    "malicious",
    "disclosure",
    "exploit",
];
const VULN_CODE: &[&str] = &[
    "memcpy_bound(dst, src, len);",
    "if (len > MAX_LEN) return -EINVAL;",
    "escape_html(input)",
    "check_bounds(index, size);",
];
const MAINT_MESSAGE: &[&str] = &[
    "refactor",
    "docs",
    "update",
    "bump",
    "cleanup",
    "rename",
    "format",
    "changelog",
    "release",
    "typo",
];
const MAINT_ISSUE: &[&str] = &[
    "feature",
    "request",
    "documentation",
    "improvement",
    "question",
    "roadmap",
];
const MAINT_CODE: &[&str] = &[
    "let total = items.len();",
    "println!(\"{}\", name);",
    "return config.value;",
    "log_info(\"starting\");",
];
const SHARED: &[&str] = &[
    "parser", "module", "handler", "request", "tests", "build", "client", "server",
];

#[derive(Debug, Clone, Copy)]
pub struct SyntheticConfig {
    pub commits: usize,
    pub negatives_per_positive: usize,
    /// Share of commits that carry an explicit issue.
    pub explicit_issue_fraction: f64,
    /// Share of issue-less commits that get a matching issue in the corpus.
    pub linkable_fraction: f64,
    /// Unrelated issues added to the corpus.
    pub distractor_issues: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            commits: 250,
            negatives_per_positive: 5,
            explicit_issue_fraction: 0.4,
            linkable_fraction: 0.5,
            distractor_issues: 20,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub records: Vec<CommitRecord>,
    pub corpus: Vec<IssueReport>,
}

pub fn generate(config: &SyntheticConfig) -> SyntheticData {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let positives =
        (config.commits as f64 / (1 + config.negatives_per_positive) as f64).round() as usize;
    let mut labels: Vec<bool> = (0..config.commits).map(|i| i < positives).collect();
    labels.shuffle(&mut rng);

    let mut records = Vec::with_capacity(config.commits);
    let mut corpus = Vec::new();
    for (i, &label) in labels.iter().enumerate() {
        let unit = format!("unit_{i}");
        let message = sentence(
            &mut rng,
            if label { VULN_MESSAGE } else { MAINT_MESSAGE },
            &unit,
        );
        let issue = issue_for(&mut rng, label, &unit);
        let patch = vec![file_change(&mut rng, label, &unit)];

        let explicit = rng.gen_bool(config.explicit_issue_fraction);
        if !explicit && rng.gen_bool(config.linkable_fraction) {
            corpus.push(issue.clone());
        }
        records.push(CommitRecord {
            id: format!("{:040x}", hash_id(config.seed, i)),
            message,
            issue: explicit.then_some(issue),
            patch,
            label: Some(label),
        });
    }
    for k in 0..config.distractor_issues {
        let unit = format!("other_{k}");
        let label = rng.gen_bool(0.5);
        corpus.push(issue_for(&mut rng, label, &unit));
    }
    corpus.shuffle(&mut rng);
    SyntheticData { records, corpus }
}

fn pick<'a>(rng: &mut ChaCha8Rng, words: &[&'a str]) -> &'a str {
    words.choose(rng).copied().expect("vocabulary is non-empty")
}

fn sentence(rng: &mut ChaCha8Rng, planted: &[&str], unit: &str) -> String {
    let mut words = vec![pick(rng, planted), pick(rng, planted), pick(rng, SHARED)];
    if rng.gen_bool(0.5) {
        words.push(pick(rng, SHARED));
    }
    words.shuffle(rng);
    format!("{} in {unit}", words.join(" "))
}

fn issue_for(rng: &mut ChaCha8Rng, label: bool, unit: &str) -> IssueReport {
    let (title_words, body_words) = if label {
        (VULN_MESSAGE, VULN_ISSUE)
    } else {
        (MAINT_MESSAGE, MAINT_ISSUE)
    };
    IssueReport {
        title: format!("{} {} in {unit}", pick(rng, title_words), pick(rng, SHARED)),
        body: format!(
            "{} {} {} affecting {unit}",
            pick(rng, body_words),
            pick(rng, body_words),
            pick(rng, SHARED)
        ),
        comments: vec![format!("{} {}", pick(rng, SHARED), pick(rng, body_words))],
    }
}

fn file_change(rng: &mut ChaCha8Rng, label: bool, unit: &str) -> FileChange {
    let code = if label { VULN_CODE } else { MAINT_CODE };
    let mut added = vec![format!("{unit}(ctx);"), pick(rng, code).to_string()];
    if rng.gen_bool(0.5) {
        added.push(pick(rng, MAINT_CODE).to_string());
    }
    FileChange {
        file_path: format!("src/{unit}.c"),
        added_lines: added,
        removed_lines: vec![pick(rng, MAINT_CODE).to_string()],
    }
}

fn hash_id(seed: u64, i: usize) -> u128 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    rng.gen::<u128>() >> 48
}
