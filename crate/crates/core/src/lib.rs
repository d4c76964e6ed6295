//! Vulnerability-fixing commit detection.
//!
//! Commits are read from JSON ([`ingest`]), commits without an explicit issue
//! are linked to the most similar report of an issue corpus ([`linker`]),
//! and three base classifiers score the message, the issue and the patch
//! ([`classifier`]). A logistic-regression stacker combines the three
//! probabilities into the final score ([`ensemble`]), and [`evaluation`]
//! holds the metrics and ablation harness.

pub mod classifier;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod ingest;
pub mod linker;
pub mod optim;
pub mod pipeline;
pub mod synthetic;
pub mod tfidf;

pub use error::{Error, Result};
