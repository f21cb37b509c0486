//! Multiple-choice QA over a fixture file and one event log.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{HarnessError, ItemOutcome, RunReport};
use crate::answer::{answer_question, AnswerConfig, McQuestion};
use crate::event_log::EventLog;
use crate::providers::{LanguageModel, Summarizer};

/// One fixture line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QaRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub question: String,
    pub options: Vec<String>,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hint: Option<String>,
    /// Question time; defaults to the last event of the log.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub now_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QaItem {
    pub id: String,
    pub question: McQuestion,
    pub gold: char,
    pub now_ms: Option<u64>,
}

impl QaItem {
    pub fn from_record(rec: &QaRecord, index: usize) -> Result<Self, String> {
        let question = McQuestion::from_parts(&rec.question, &rec.options, rec.hint.as_deref()).map_err(|e| e.to_string())?;
        let mut letters = rec.answer.trim().chars();
        let gold = match (letters.next(), letters.next()) {
            (Some(c), None) => c.to_ascii_uppercase(),
            _ => return Err(format!("answer `{}` is not a single letter", rec.answer)),
        };
        if !question.options.contains_key(&gold) {
            return Err(format!("answer `{gold}` is not one of the {} options", question.num_options()));
        }
        Ok(QaItem {
            id: rec.id.clone().unwrap_or_else(|| format!("q{}", index + 1)),
            question,
            gold,
            now_ms: rec.now_ms,
        })
    }
}

pub fn parse_qa_fixture(text: &str, path: &str) -> Result<Vec<QaItem>, HarnessError> {
    let mut items = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |reason: String| HarnessError::Fixture {
            path: path.to_string(),
            line: i + 1,
            reason,
        };
        let rec: QaRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        items.push(QaItem::from_record(&rec, items.len()).map_err(err)?);
    }
    Ok(items)
}

pub fn load_qa_fixture(path: impl AsRef<Path>) -> Result<Vec<QaItem>, HarnessError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| HarnessError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_qa_fixture(&text, &path.display().to_string())
}

pub struct QaRun<'a> {
    pub log: &'a EventLog,
    pub summarizer: &'a dyn Summarizer,
    pub lm: &'a dyn LanguageModel,
    pub budget: usize,
    pub answer: AnswerConfig,
    /// The run passes iff accuracy reaches this.
    pub accuracy_floor: f64,
}

pub fn run_qa(items: &[QaItem], run: &QaRun<'_>) -> RunReport {
    let started = Instant::now();
    let default_now = run.log.last_timestamp().unwrap_or(0);
    let outcomes = items
        .iter()
        .map(|item| {
            let now = item.now_ms.unwrap_or(default_now);
            match answer_question(&item.question, run.log, run.summarizer, run.lm, run.budget, now, &run.answer) {
                Ok((letter, diag)) => {
                    let ok = letter == item.gold;
                    ItemOutcome {
                        id: item.id.clone(),
                        passed: ok,
                        score: if ok { 1.0 } else { 0.0 },
                        detail: json!({"predicted": letter.to_string(), "gold": item.gold.to_string(), "diagnostics": diag}),
                    }
                }
                Err(e) => ItemOutcome {
                    id: item.id.clone(),
                    passed: false,
                    score: 0.0,
                    detail: json!({"gold": item.gold.to_string(), "error": e.to_string()}),
                },
            }
        })
        .collect();
    let mut report = RunReport::new(
        "qa",
        json!({
            "budget": run.budget,
            "chunk_duration_ms": run.answer.context.chunk_duration_ms,
            "use_context": run.answer.use_context,
            "variants": run.answer.variants,
            "accuracy_floor": run.accuracy_floor,
        }),
        outcomes,
    );
    report.passed = report.aggregate >= run.accuracy_floor || items.is_empty();
    report.metrics.insert("accuracy".into(), report.aggregate);
    if let Some(k) = items.first().map(|i| i.question.num_options()) {
        if items.iter().all(|i| i.question.num_options() == k) {
            report.metrics.insert("chance".into(), 1.0 / k as f64);
        }
    }
    report.wall = started.elapsed();
    report
}
