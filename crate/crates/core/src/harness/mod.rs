//! Offline experiment runners behind the CLI subcommands. Every runner
//! returns a [`RunReport`] whose serialized form is reproducible byte for
//! byte from the same inputs and seed.

pub mod montecarlo;
pub mod qa;
pub mod replay;
pub mod synthetic;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use montecarlo::{analytic_commit_rate, board_montecarlo, McParams};
pub use qa::{load_qa_fixture, parse_qa_fixture, run_qa, QaItem, QaRun};
pub use replay::replay_audio;
pub use synthetic::{synthetic_qa, SyntheticQa};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}:{line}: {reason}")]
    Fixture { path: String, line: usize, reason: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Audio(#[from] crate::audio::AudioError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemOutcome {
    pub id: String,
    pub passed: bool,
    /// In [0, 1]; the aggregate is the mean over items.
    pub score: f64,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub detail: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub config: Value,
    pub items: Vec<ItemOutcome>,
    pub aggregate: f64,
    pub passed: bool,
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
    /// Not serialized, so reports stay reproducible.
    #[serde(skip)]
    pub wall: Duration,
}

impl RunReport {
    pub fn new(name: &str, config: Value, items: Vec<ItemOutcome>) -> Self {
        let aggregate = mean_score(&items);
        RunReport {
            name: name.to_string(),
            config,
            items,
            aggregate,
            passed: false,
            metrics: BTreeMap::new(),
            wall: Duration::ZERO,
        }
    }

    /// Mean item score recomputed from the items; 0 with no items.
    pub fn recompute_aggregate(&self) -> f64 {
        mean_score(&self.items)
    }

    pub fn passed_count(&self) -> usize {
        self.items.iter().filter(|i| i.passed).count()
    }

    /// A header line followed by one line per item.
    pub fn to_jsonl(&self) -> String {
        let header = serde_json::json!({
            "report": self.name,
            "config": self.config,
            "items": self.items.len(),
            "passed_items": self.passed_count(),
            "aggregate": self.aggregate,
            "passed": self.passed,
            "metrics": self.metrics,
        });
        let mut out = serde_json::to_string(&header).expect("report serializes");
        out.push('\n');
        for item in &self.items {
            out.push_str(&serde_json::to_string(item).expect("item serializes"));
            out.push('\n');
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{}: {} items, {} passed, aggregate {:.4} -> {}",
            self.name,
            self.items.len(),
            self.passed_count(),
            self.aggregate,
            if self.passed { "PASS" } else { "FAIL" }
        );
        for (k, v) in &self.metrics {
            let _ = write!(s, "\n  {k} = {v}");
        }
        let _ = write!(s, "\n  wall = {} ms", self.wall.as_millis());
        s
    }
}

fn mean_score(items: &[ItemOutcome]) -> f64 {
    if items.is_empty() {
        0.0
    } else {
        items.iter().map(|i| i.score).sum::<f64>() / items.len() as f64
    }
}
