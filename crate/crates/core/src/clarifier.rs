//! Intent disambiguation gate: score a few candidate readings of the
//! request, then either commit to the best one or ask a short question.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::context::render_event;
use crate::event_log::{Event, Modality};
use crate::providers::{keywords, LanguageModel};

pub const MAX_CANDIDATES: usize = 3;
/// Slack for comparing normalized scores against the margin.
const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClarifierInput {
    pub text_history: Vec<String>,
    pub visual_history: Vec<Event>,
    /// Session state summary; records the resolved reading once known.
    pub state: String,
    pub resolved: Option<String>,
}

impl ClarifierInput {
    pub fn new(text_history: Vec<String>, visual_history: Vec<Event>, state: impl Into<String>) -> Self {
        ClarifierInput {
            text_history,
            visual_history: visual_history
                .into_iter()
                .filter(|e| e.modality == Modality::Visual)
                .collect(),
            state: state.into(),
            resolved: None,
        }
    }

    fn render(&self) -> String {
        let mut out = String::new();
        if !self.text_history.is_empty() {
            out.push_str("Conversation:\n");
            for t in &self.text_history {
                out.push_str(&format!("- {t}\n"));
            }
        }
        if !self.visual_history.is_empty() {
            out.push_str("Seen:\n");
            for e in &self.visual_history {
                out.push_str(&format!("- {}\n", render_event(e)));
            }
        }
        if !self.state.is_empty() {
            out.push_str(&format!("State: {}\n", self.state));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interpretation {
    pub id: usize,
    pub paraphrase: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClarifierDecision {
    Answer { id: usize },
    Ask { question: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClarifierConfig {
    pub enabled: bool,
    /// Tool-name prefixes (e.g. `calendar`) that switch the gate on when
    /// one of their tools is available. Empty means every turn.
    pub categories: Vec<String>,
    pub p_min_answer: f64,
    pub margin: f64,
    pub max_rounds: usize,
}

impl Default for ClarifierConfig {
    fn default() -> Self {
        ClarifierConfig {
            enabled: true,
            categories: Vec::new(),
            p_min_answer: 0.5,
            margin: 0.15,
            max_rounds: 1,
        }
    }
}

impl ClarifierConfig {
    pub fn disabled() -> Self {
        ClarifierConfig {
            enabled: false,
            ..ClarifierConfig::default()
        }
    }

    /// Whether the gate runs given the names of the available tools.
    pub fn applies_to<'a>(&self, tools: impl IntoIterator<Item = &'a str>) -> bool {
        if !self.enabled || self.max_rounds == 0 {
            return false;
        }
        if self.categories.is_empty() {
            return true;
        }
        tools.into_iter().any(|name| {
            self.categories
                .iter()
                .any(|c| name == c || name.starts_with(&format!("{c}.")))
        })
    }
}

pub fn interpretation_prompt(input: &ClarifierInput, query: &str) -> String {
    format!(
        "List up to {MAX_CANDIDATES} distinct readings of the user's request as a JSON array of strings.\n{}interpret: {query}",
        input.render()
    )
}

pub fn scoring_prompt(input: &ClarifierInput, paraphrase: &str) -> String {
    format!(
        "Rate how plausible this reading is from 0 to 10. Reply with a number.\n{}score interpretation: {paraphrase}",
        input.render()
    )
}

/// Asks the provider for candidate readings. Unusable output yields an
/// empty list, which disables the gate for the turn.
pub fn propose_candidates(input: &ClarifierInput, query: &str, lm: &dyn LanguageModel) -> Vec<String> {
    let raw = match lm.complete(&interpretation_prompt(input, query)) {
        Ok(r) => r,
        Err(e) => {
            tracing::warn!(error = %e, "interpretation proposal failed");
            return Vec::new();
        }
    };
    let parsed: Vec<String> = match serde_json::from_str(raw.trim()) {
        Ok(v) => v,
        Err(_) => return Vec::new(),
    };
    let mut seen = BTreeSet::new();
    parsed
        .into_iter()
        .map(|p| p.trim().to_string())
        .filter(|p| !p.is_empty() && seen.insert(p.to_lowercase()))
        .take(MAX_CANDIDATES)
        .collect()
}

fn first_number(text: &str) -> Option<f64> {
    static NUM: OnceLock<Regex> = OnceLock::new();
    let re = NUM.get_or_init(|| Regex::new(r"-?\d+(?:\.\d+)?").expect("valid regex"));
    re.find(text)?.as_str().parse().ok()
}

/// Normalizes raw non-negative scores to sum to one; all-zero (or empty
/// of signal) falls back to uniform.
pub fn normalize_scores(raw: &[f64]) -> Vec<f64> {
    let clean: Vec<f64> = raw
        .iter()
        .map(|&x| if x.is_finite() && x > 0.0 { x } else { 0.0 })
        .collect();
    let total: f64 = clean.iter().sum();
    if total <= 0.0 {
        return vec![1.0 / raw.len() as f64; raw.len()];
    }
    clean.iter().map(|x| x / total).collect()
}

pub fn score_candidates(input: &ClarifierInput, candidates: &[String], lm: &dyn LanguageModel) -> Vec<Interpretation> {
    let mut raw = Vec::with_capacity(candidates.len());
    for c in candidates {
        match lm.complete(&scoring_prompt(input, c)).ok().and_then(|r| first_number(&r)) {
            Some(x) => raw.push(x),
            None => {
                tracing::warn!(candidate = %c, "scoring failed, using uniform scores");
                raw = vec![0.0; candidates.len()];
                break;
            }
        }
    }
    normalize_scores(&raw)
        .into_iter()
        .zip(candidates)
        .enumerate()
        .map(|(id, (score, p))| Interpretation {
            id,
            paraphrase: p.clone(),
            score,
        })
        .collect()
}

/// Answers with the top reading iff it is both likely enough and clearly
/// ahead of the runner-up; otherwise asks. Equal scores keep input order.
pub fn decide(candidates: &[Interpretation], cfg: &ClarifierConfig) -> ClarifierDecision {
    let mut ranked: Vec<&Interpretation> = candidates.iter().collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score));
    let Some(top) = ranked.first() else {
        return ClarifierDecision::Ask {
            question: "Could you say a bit more about what you need?".into(),
        };
    };
    let second = ranked.get(1).map_or(0.0, |i| i.score);
    if top.score + EPS >= cfg.p_min_answer && top.score - second + EPS >= cfg.margin {
        return ClarifierDecision::Answer { id: top.id };
    }
    let question = match ranked.get(1) {
        Some(runner) => format!("Do you mean {} or {}?", top.paraphrase, runner.paraphrase),
        None => format!("Do you mean {}?", top.paraphrase),
    };
    ClarifierDecision::Ask { question }
}

/// Index of the offered reading that `reply` picks out, if exactly one.
pub fn match_reply(reply: &str, offered: &[String]) -> Option<usize> {
    let r = reply.trim().to_lowercase();
    if r.is_empty() {
        return None;
    }
    let hits: Vec<usize> = offered
        .iter()
        .enumerate()
        .filter(|(_, o)| {
            let o = o.to_lowercase();
            o.contains(&r) || r.contains(&o)
        })
        .map(|(i, _)| i)
        .collect();
    if hits.len() == 1 {
        return Some(hits[0]);
    }

    // Fall back to words that belong to exactly one offered reading.
    let said = keywords(reply);
    let words: Vec<BTreeSet<String>> = offered.iter().map(|o| keywords(o)).collect();
    let hits: Vec<usize> = (0..offered.len())
        .filter(|&i| {
            words[i]
                .iter()
                .filter(|w| words.iter().enumerate().all(|(j, other)| j == i || !other.contains(*w)))
                .any(|w| said.contains(w))
        })
        .collect();
    (hits.len() == 1).then(|| hits[0])
}

/// Folds the user's reply into the input. Empty replies change nothing.
pub fn apply_reply(input: &ClarifierInput, reply: &str, offered: &[String]) -> ClarifierInput {
    let mut out = input.clone();
    if reply.trim().is_empty() {
        return out;
    }
    out.text_history.push(reply.trim().to_string());
    if let Some(i) = match_reply(reply, offered) {
        out.resolved = Some(offered[i].clone());
        out.state = format!("resolved: {}", offered[i]);
    }
    out
}
