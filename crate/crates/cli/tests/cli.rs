use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use serde_json::Value;
use tempfile::TempDir;
use vfdetect::ingest::{to_input_json, CommitRecord, IssueReport};
use vfdetect::linker::LinkerIndex;
use vfdetect::synthetic::{generate, SyntheticConfig};

fn exe(name: &str) -> Command {
    let path = match name {
        "linker_builder" => env!("CARGO_BIN_EXE_linker_builder"),
        "model_builder" => env!("CARGO_BIN_EXE_model_builder"),
        "application" => env!("CARGO_BIN_EXE_application"),
        _ => unreachable!(),
    };
    Command::new(path)
}

fn run(name: &str, args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    exe(name)
        .args(args.iter().map(|a| a.as_ref()))
        .output()
        .unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_issues(dir: &Path, titles: &[&str]) {
    std::fs::create_dir_all(dir).unwrap();
    for (i, t) in titles.iter().enumerate() {
        let issue = IssueReport {
            title: t.to_string(),
            body: format!("body {t}"),
            comments: vec![],
        };
        std::fs::write(
            dir.join(format!("{i}.json")),
            serde_json::to_string(&issue).unwrap(),
        )
        .unwrap();
    }
}

/// One trained model directory (with linker) shared by the application tests.
struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn models(&self) -> PathBuf {
        self.dir.path().join("models")
    }

    fn input(&self) -> PathBuf {
        self.dir.path().join("input.json")
    }
}

fn fixture() -> &'static Fixture {
    static FIXTURE: OnceLock<Fixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let data = generate(&SyntheticConfig {
            commits: 200,
            ..SyntheticConfig::default()
        });
        let train = dir.path().join("train.json");
        std::fs::write(&train, to_input_json(&data.records).unwrap()).unwrap();
        let corpus = dir.path().join("corpus");
        std::fs::create_dir_all(&corpus).unwrap();
        for (i, issue) in data.corpus.iter().enumerate() {
            std::fs::write(
                corpus.join(format!("{i:03}.json")),
                serde_json::to_string(issue).unwrap(),
            )
            .unwrap();
        }
        let linker = dir.path().join("linker.json");
        assert!(run(
            "linker_builder",
            &[&"--corpus_path", &corpus, &"--output", &linker]
        )
        .status
        .success());
        let models = dir.path().join("models");
        let out = run(
            "model_builder",
            &[
                &"--data_path",
                &train,
                &"--model-dir",
                &models,
                &"--linker",
                &linker,
            ],
        );
        assert!(out.status.success(), "{}", stderr(&out));

        let unlabeled: Vec<CommitRecord> = data
            .records
            .iter()
            .take(30)
            .cloned()
            .map(|r| CommitRecord { label: None, ..r })
            .collect();
        std::fs::write(
            dir.path().join("input.json"),
            to_input_json(&unlabeled).unwrap(),
        )
        .unwrap();
        Fixture { dir }
    })
}

fn rows(path: &Path) -> Vec<Value> {
    serde_json::from_str::<Value>(&std::fs::read_to_string(path).unwrap())
        .unwrap()
        .as_array()
        .unwrap()
        .clone()
}

#[test]
fn linker_builder_indexes_three_issues_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    write_issues(
        &corpus,
        &[
            "crash in parseHeader",
            "update docs",
            "overflow in read_buf",
        ],
    );
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let out = run(
        "linker_builder",
        &[&"-corpus_path", &corpus, &"-output", &a],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("indexed 3 issues"));
    assert!(run(
        "linker_builder",
        &[&"--corpus_path", &corpus, &"--output", &b]
    )
    .status
    .success());
    assert_eq!(LinkerIndex::load(&a).unwrap().len(), 3);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn linker_builder_reports_missing_and_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        "linker_builder",
        &[
            &"--corpus_path",
            &dir.path().join("nope"),
            &"--output",
            &dir.path().join("l.json"),
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("corpus not found"),
        "{}",
        stderr(&out)
    );

    let empty = dir.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let out = run(
        "linker_builder",
        &[
            &"--corpus_path",
            &empty,
            &"--output",
            &dir.path().join("l.json"),
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("empty corpus"), "{}", stderr(&out));
    assert!(!dir.path().join("l.json").exists());
}

#[test]
fn model_builder_writes_four_artifacts_and_manifest() {
    let models = fixture().models();
    for artifact in ["message", "issue", "patch"] {
        assert!(
            models.join(artifact).join("weights.json").is_file(),
            "{artifact}"
        );
        assert!(
            models.join(artifact).join("manifest.json").is_file(),
            "{artifact}"
        );
    }
    assert!(models.join("ensemble.json").is_file());
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(models.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["backend"], "fallback");
    assert_eq!(manifest["folds"], 5);
    assert!(manifest["seed"].is_u64());
    assert!(models.join("linker.json").is_file());
}

#[test]
fn model_builder_lists_first_ten_violations() {
    let dir = tempfile::tempdir().unwrap();
    let records: Vec<Value> = (0..14)
        .map(|i| serde_json::json!({"id": format!("c{i}"), "message": "m", "patch": []}))
        .collect();
    let data = dir.path().join("bad.json");
    std::fs::write(&data, serde_json::to_string(&records).unwrap()).unwrap();
    let out = run(
        "model_builder",
        &[&"--data_path", &data, &"--model-dir", &dir.path().join("m")],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("14 schema violation"), "{err}");
    assert_eq!(err.matches("label absent").count(), 10, "{err}");
    assert!(err.contains("and 4 more"), "{err}");
    assert!(!dir.path().join("m").exists());
}

#[test]
fn model_builder_rejects_single_class() {
    let dir = tempfile::tempdir().unwrap();
    let records: Vec<CommitRecord> = (0..10)
        .map(|i| CommitRecord {
            id: format!("c{i}"),
            message: "fix overflow".into(),
            issue: None,
            patch: vec![],
            label: Some(true),
        })
        .collect();
    let data = dir.path().join("one.json");
    std::fs::write(&data, to_input_json(&records).unwrap()).unwrap();
    let out = run(
        "model_builder",
        &[&"--data_path", &data, &"--model-dir", &dir.path().join("m")],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("degenerate labels"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn prediction_mode_keeps_input_order_and_flags() {
    let f = fixture();
    let out_path = f.dir.path().join("pred_default.json");
    let out = run(
        "application",
        &[
            &"-mode",
            &"prediction",
            &"-input",
            &f.input(),
            &"-output",
            &out_path,
            &"-model-dir",
            &f.models(),
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let input: Vec<Value> = rows(&f.input());
    let output = rows(&out_path);
    assert_eq!(input.len(), output.len());
    for (i, o) in input.iter().zip(&output) {
        assert_eq!(i["id"], o["id"]);
        let p = o["probability"].as_f64().unwrap();
        assert!(p > 0.0 && p < 1.0);
        assert_eq!(o["prediction"].as_bool().unwrap(), p > 0.5);
        assert_eq!(o.as_object().unwrap().len(), 3);
    }
}

#[test]
fn threshold_zero_flags_everything() {
    let f = fixture();
    let out_path = f.dir.path().join("pred_zero.json");
    let out = run(
        "application",
        &[
            &"--mode",
            &"prediction",
            &"--input",
            &f.input(),
            &"--output",
            &out_path,
            &"--model-dir",
            &f.models(),
            &"--threshold",
            &"0",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(rows(&out_path).iter().all(|r| r["prediction"] == true));
}

#[test]
fn ranking_mode_sorts_and_ignores_threshold() {
    let f = fixture();
    let out_path = f.dir.path().join("rank.json");
    let out = run(
        "application",
        &[
            &"--mode",
            &"ranking",
            &"--input",
            &f.input(),
            &"--output",
            &out_path,
            &"--model-dir",
            &f.models(),
            &"--threshold",
            &"0.9",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("ranking mode"), "{}", stderr(&out));
    let ranked = rows(&out_path);
    assert_eq!(ranked.len(), 30);
    for pair in ranked.windows(2) {
        assert!(pair[0]["probability"].as_f64() >= pair[1]["probability"].as_f64());
    }
    assert!(ranked.iter().all(|r| r.as_object().unwrap().len() == 2));
}

#[test]
fn empty_input_gives_empty_output() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.json");
    std::fs::write(&input, "[]").unwrap();
    for mode in ["prediction", "ranking"] {
        let out_path = dir.path().join(format!("{mode}.json"));
        let out = run(
            "application",
            &[
                &"--mode",
                &mode,
                &"--input",
                &input,
                &"--output",
                &out_path,
                &"--model-dir",
                &f.models(),
            ],
        );
        assert!(out.status.success(), "{}", stderr(&out));
        assert!(rows(&out_path).is_empty());
    }
}

#[test]
fn application_failures_exit_one_without_output() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("out.json");

    let out = run(
        "application",
        &[
            &"--mode",
            &"prediction",
            &"--input",
            &f.input(),
            &"--output",
            &out_path,
            &"--model-dir",
            &dir.path().join("missing"),
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("model directory not found"),
        "{}",
        stderr(&out)
    );

    let out = run(
        "application",
        &[
            &"--mode",
            &"prediction",
            &"--input",
            &f.input(),
            &"--output",
            &out_path,
            &"--model-dir",
            &f.models(),
            &"--threshold",
            &"1.5",
        ],
    );
    assert_eq!(out.status.code(), Some(1));

    let out = run(
        "application",
        &[
            &"--mode",
            &"prediction",
            &"--input",
            &dir.path().join("none.json"),
            &"--output",
            &out_path,
            &"--model-dir",
            &f.models(),
        ],
    );
    assert_eq!(out.status.code(), Some(1));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "[{\"id\": \"a\", ").unwrap();
    let out = run(
        "application",
        &[
            &"--mode",
            &"prediction",
            &"--input",
            &bad,
            &"--output",
            &out_path,
            &"--model-dir",
            &f.models(),
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(!out_path.exists());
}
