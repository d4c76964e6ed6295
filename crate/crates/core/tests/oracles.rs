//! Implementation-vs-oracle checks: TF-IDF similarity against a brute-force
//! computation, the stacker against IRLS, metrics against a per-record
//! counter, and the diff parser against the system `diff` tool.

mod common;

use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vfdetect::ensemble::{fit_stacker, StackedFeatures, STACKER_L2};
use vfdetect::evaluation::compute_metrics;
use vfdetect::ingest::{parse_unified_diff, CommitRecord};
use vfdetect::linker::{extract_terms, LinkerConfig, LinkerIndex};

use common::*;

#[test]
fn extract_terms_routes_toy_vocabulary() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let doc = toy_doc(&mut rng, NL_WORDS, CODE_WORDS);
        let profile = extract_terms(&doc.text);
        assert_eq!(profile.nl_terms, doc.nl, "{}", doc.text);
        assert_eq!(profile.code_terms, doc.code, "{}", doc.text);
    }
}

#[test]
fn similarity_matches_brute_force_on_toy_corpora() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut nonzero = 0;
    for _ in 0..20 {
        let n_docs = rng.gen_range(1..=6);
        let docs: Vec<ToyDoc> = (0..n_docs)
            .map(|_| toy_doc(&mut rng, NL_WORDS, CODE_WORDS))
            .collect();
        let index = LinkerIndex::build(
            docs.iter().map(issue_from).collect(),
            LinkerConfig::default(),
        )
        .unwrap();
        let nl_corpus: Vec<_> = docs.iter().map(|d| d.nl.clone()).collect();
        let code_corpus: Vec<_> = docs.iter().map(|d| d.code.clone()).collect();

        for _ in 0..5 {
            let query = toy_doc(&mut rng, NL_WORDS, CODE_WORDS);
            let profile = extract_terms(&query.text);
            for target in 0..n_docs {
                let expected = brute_force_cosine(&nl_corpus, &query.nl, target)
                    .max(brute_force_cosine(&code_corpus, &query.code, target));
                let actual = index.similarity(&profile, target).unwrap();
                assert!(
                    (actual - expected).abs() < 1e-9,
                    "target {target}: {actual} vs {expected}"
                );
                if expected > 0.0 {
                    nonzero += 1;
                }
            }
        }
    }
    assert!(
        nonzero > 50,
        "oracle comparison degenerate: {nonzero} nonzero cases"
    );
}

#[test]
fn three_issue_corpus_link_matches_oracle() {
    let issues = [
        "alpha bravo get_value",
        "charlie delta setLimit",
        "echo foxtrot alpha",
    ];
    let docs: Vec<ToyDoc> = issues
        .iter()
        .map(|t| {
            let p = extract_terms(t);
            ToyDoc {
                text: t.to_string(),
                nl: p.nl_terms,
                code: p.code_terms,
            }
        })
        .collect();
    let index = LinkerIndex::build(
        docs.iter().map(issue_from).collect(),
        LinkerConfig::default(),
    )
    .unwrap();
    let commit = CommitRecord {
        id: "c".into(),
        message: "charlie delta tweak".into(),
        issue: None,
        patch: vec![],
        label: None,
    };
    let profile = extract_terms(&commit.message);
    let nl_corpus: Vec<_> = docs.iter().map(|d| d.nl.clone()).collect();
    let oracle: Vec<f64> = (0..3)
        .map(|t| brute_force_cosine(&nl_corpus, &profile.nl_terms, t))
        .collect();
    // "tweak" is out of vocabulary, so the commit vector matches issue 1's nl part.
    assert!(oracle[1] > 0.5 && oracle[0] == 0.0 && oracle[2] == 0.0);
    assert_eq!(index.link_position(&commit).unwrap(), Some(1));
    assert_eq!(
        index.link_commit(&commit).unwrap().unwrap().title,
        issues[1]
    );
}

#[test]
fn stacker_matches_irls_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let n = 40;
        let mut feats = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let y = rng.gen_bool(0.3);
            let shift = if y { 0.25 } else { 0.0 };
            let f = StackedFeatures {
                p_message: (rng.gen::<f64>() * 0.75 + shift).min(1.0),
                p_issue: rng.gen::<f64>(),
                p_patch: (rng.gen::<f64>() * 0.8 + shift * 0.8).min(1.0),
                issue_imputed: false,
            };
            feats.push(f);
            labels.push(y);
        }
        if labels.iter().all(|&y| y) || labels.iter().all(|&y| !y) {
            continue;
        }
        let (weights, bias) = fit_stacker(&feats, &labels).unwrap();
        let xs: Vec<Vec<f64>> = feats.iter().map(|f| f.as_array().to_vec()).collect();
        let (oracle_w, oracle_b) = irls_logistic(&xs, &labels, STACKER_L2);
        for k in 0..3 {
            assert!(
                (weights[k] - oracle_w[k]).abs() < 1e-4,
                "w{k}: {} vs {}",
                weights[k],
                oracle_w[k]
            );
        }
        assert!((bias - oracle_b).abs() < 1e-4, "bias: {bias} vs {oracle_b}");
    }
}

#[test]
fn metrics_match_per_record_counter() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..200 {
        let n = rng.gen_range(0..40);
        let labels: Vec<(String, bool)> = (0..n)
            .map(|i| (format!("id{i}"), rng.gen_bool(0.3)))
            .collect();
        let mut predictions: Vec<(String, bool)> = labels
            .iter()
            .map(|(id, _)| (id.clone(), rng.gen_bool(0.4)))
            .collect();
        predictions.reverse();
        let report = compute_metrics(&predictions, &labels).unwrap();
        let [tp, fp, fn_, tn] = brute_force_counts(&predictions, &labels);
        let c = report.confusion;
        assert_eq!([c.tp, c.fp, c.fn_, c.tn], [tp, fp, fn_, tn]);
    }
}

fn diff_available() -> bool {
    Command::new("diff").arg("--version").output().is_ok()
}

fn reference_diff(old: &[String], new: &[String]) -> String {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("old.txt"), dir.path().join("new.txt"));
    std::fs::write(&a, old.iter().map(|l| format!("{l}\n")).collect::<String>()).unwrap();
    std::fs::write(&b, new.iter().map(|l| format!("{l}\n")).collect::<String>()).unwrap();
    let out = Command::new("diff")
        .arg("-u")
        .arg(&a)
        .arg(&b)
        .output()
        .unwrap();
    String::from_utf8(out.stdout).unwrap()
}

fn is_subsequence(needle: &[String], haystack: &[String]) -> bool {
    let mut it = haystack.iter();
    needle.iter().all(|n| it.any(|h| h == n))
}

#[test]
fn parser_agrees_with_reference_diff_tool() {
    if !diff_available() {
        eprintln!("skipping: `diff` not available");
        return;
    }
    let one = |s: &str| vec![s.to_string()];
    let changes = parse_unified_diff(&reference_diff(&one("y"), &one("x")));
    assert_eq!(changes.len(), 1);
    assert_eq!(changes[0].added_lines, one("x"));
    assert_eq!(changes[0].removed_lines, one("y"));

    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let alphabet = [
        "a",
        "b",
        "c",
        "d",
        "-- dashes",
        "++ plus",
        "",
        "    indented",
    ];
    for _ in 0..60 {
        let gen = |rng: &mut ChaCha8Rng| -> Vec<String> {
            (0..rng.gen_range(1..25))
                .map(|_| alphabet[rng.gen_range(0..alphabet.len())].to_string())
                .collect()
        };
        let old = gen(&mut rng);
        let new = gen(&mut rng);
        let text = reference_diff(&old, &new);
        let changes = parse_unified_diff(&text);
        if old == new {
            assert!(changes.is_empty());
            continue;
        }
        assert_eq!(changes.len(), 1, "{text}");
        let c = &changes[0];
        assert!(is_subsequence(&c.removed_lines, &old), "{text}");
        assert!(is_subsequence(&c.added_lines, &new), "{text}");
        // Lines kept on both sides form the common subsequence.
        assert_eq!(
            old.len() - c.removed_lines.len(),
            new.len() - c.added_lines.len(),
            "{text}"
        );
    }
}

#[test]
fn context_only_hunk_from_reference_tool() {
    // A hunk with only context lines cannot come out of `diff` for equal
    // files, so it is built by hand in the tool's exact format.
    let text = "--- old.txt\t2024-01-01 00:00:00\n+++ new.txt\t2024-01-01 00:00:00\n@@ -1,3 +1,3 @@\n a\n b\n c\n";
    let changes = parse_unified_diff(text);
    assert_eq!(changes.len(), 1);
    assert_eq!(changes[0].file_path, "new.txt");
    assert!(changes[0].added_lines.is_empty() && changes[0].removed_lines.is_empty());
}
