#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use vfdetect::ingest::IssueReport;

/// Natural-language and code words whose channel routing is known up front.
pub const NL_WORDS: &[&str] = &["alpha", "bravo", "charlie", "delta", "echo", "foxtrot"];
pub const CODE_WORDS: &[&str] = &[
    "get_value",
    "setLimit",
    "os.path",
    "read_buf",
    "parseHeader",
    "max_len",
];

/// A toy document: the raw text plus the term counts an independent reader
/// expects in each channel.
#[derive(Debug, Clone)]
pub struct ToyDoc {
    pub text: String,
    pub nl: BTreeMap<String, usize>,
    pub code: BTreeMap<String, usize>,
}

pub fn toy_doc(rng: &mut impl Rng, nl_vocab: &[&str], code_vocab: &[&str]) -> ToyDoc {
    let mut words = Vec::new();
    let mut nl = BTreeMap::new();
    let mut code = BTreeMap::new();
    for _ in 0..rng.gen_range(0..6) {
        let w = *nl_vocab.choose(rng).unwrap();
        *nl.entry(w.to_string()).or_insert(0) += 1;
        words.push(w);
    }
    for _ in 0..rng.gen_range(0..6) {
        let w = *code_vocab.choose(rng).unwrap();
        *code.entry(w.to_string()).or_insert(0) += 1;
        words.push(w);
    }
    words.shuffle(rng);
    ToyDoc {
        text: words.join(" "),
        nl,
        code,
    }
}

pub fn issue_from(doc: &ToyDoc) -> IssueReport {
    IssueReport {
        title: doc.text.clone(),
        body: String::new(),
        comments: vec![],
    }
}

/// Brute-force smoothed TF-IDF cosine between a query and corpus document
/// `target`, over one channel's counts. Written from the textbook
/// definitions with dense vectors over the corpus vocabulary.
pub fn brute_force_cosine(
    corpus: &[BTreeMap<String, usize>],
    query: &BTreeMap<String, usize>,
    target: usize,
) -> f64 {
    let mut vocab: Vec<&String> = corpus.iter().flat_map(|d| d.keys()).collect();
    vocab.sort();
    vocab.dedup();
    let n = corpus.len() as f64;
    let idf: Vec<f64> = vocab
        .iter()
        .map(|t| {
            let df = corpus.iter().filter(|d| d.contains_key(*t)).count() as f64;
            ((1.0 + n) / (1.0 + df)).ln() + 1.0
        })
        .collect();
    let weights = |doc: &BTreeMap<String, usize>| -> Vec<f64> {
        vocab
            .iter()
            .zip(&idf)
            .map(|(t, w)| *doc.get(*t).unwrap_or(&0) as f64 * w)
            .collect()
    };
    let a = weights(query);
    let b = weights(&corpus[target]);
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Per-record confusion counts, counted the long way.
pub fn brute_force_counts(predictions: &[(String, bool)], labels: &[(String, bool)]) -> [usize; 4] {
    let mut counts = [0usize; 4];
    for (id, predicted) in predictions {
        let actual = labels.iter().find(|(l, _)| l == id).unwrap().1;
        let slot = match (*predicted, actual) {
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (false, false) => 3,
        };
        counts[slot] += 1;
    }
    counts
}

/// Logistic regression with an L2 penalty on the weights (bias free) by
/// iteratively reweighted least squares, i.e. Newton steps solved with
/// Gaussian elimination.
pub fn irls_logistic(xs: &[Vec<f64>], ys: &[bool], l2: f64) -> (Vec<f64>, f64) {
    let d = xs[0].len();
    let p = d + 1;
    let n = xs.len() as f64;
    let mut beta = vec![0.0; p];
    for _ in 0..100 {
        let mut grad = vec![0.0; p];
        let mut hess = vec![vec![0.0; p]; p];
        for (x, &y) in xs.iter().zip(ys) {
            let mut row = x.clone();
            row.push(1.0);
            let z: f64 = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
            let mu = 1.0 / (1.0 + (-z).exp());
            let w = mu * (1.0 - mu);
            let t = if y { 1.0 } else { 0.0 };
            for i in 0..p {
                grad[i] += (mu - t) * row[i] / n;
                for j in 0..p {
                    hess[i][j] += w * row[i] * row[j] / n;
                }
            }
        }
        for i in 0..d {
            grad[i] += l2 * beta[i];
            hess[i][i] += l2;
        }
        let step = solve(hess, grad);
        let mut max_step = 0.0f64;
        for i in 0..p {
            beta[i] -= step[i];
            max_step = max_step.max(step[i].abs());
        }
        if max_step < 1e-14 {
            break;
        }
    }
    let bias = beta.pop().unwrap();
    (beta, bias)
}

fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col].clone();
            for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}
