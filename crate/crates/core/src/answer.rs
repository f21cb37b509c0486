//! Multiple-choice QA tail: question normalization, prompt variants,
//! answer-letter extraction and majority voting.
//!
//! The five templates here are house-written stand-ins; the original
//! prompt wording was never published.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::{assemble_context, ContextBundle, ContextConfig, ContextError};
use crate::event_log::EventLog;
use crate::providers::{LanguageModel, Summarizer};

pub const VIEWPOINT_PREAMBLE: &str = "From my first-person view, ";
pub const DEFAULT_VARIANTS: usize = 5;
const MAX_OPTIONS: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum AnswerError {
    #[error("malformed question: {0}")]
    MalformedQuestion(String),
    #[error("no answer letter could be extracted from any variant")]
    NoExtractableAnswer,
    #[error("every variant failed at the provider: {0}")]
    ProviderFailure(String),
    #[error(transparent)]
    Context(#[from] ContextError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct McQuestion {
    pub stem: String,
    /// Letters contiguous from `A`.
    pub options: BTreeMap<char, String>,
    pub hint: Option<String>,
}

const SUBJECT_PRONOUNS: &[&str] = &["i", "you", "he", "she", "it", "we", "they"];

fn has_subject_pronoun(stem: &str) -> bool {
    stem.split(|c: char| !c.is_alphabetic())
        .any(|w| SUBJECT_PRONOUNS.contains(&w.to_lowercase().as_str()))
}

fn ground_stem(stem: &str) -> String {
    let stem = stem.split_whitespace().collect::<Vec<_>>().join(" ");
    if stem.starts_with(VIEWPOINT_PREAMBLE.trim_end()) || has_subject_pronoun(&stem) {
        return stem;
    }
    let mut chars = stem.chars();
    let lowered = match (chars.next(), chars.clone().next()) {
        (Some(first), Some(second)) if first.is_uppercase() && !second.is_uppercase() => {
            first.to_lowercase().chain(chars).collect()
        }
        _ => stem.clone(),
    };
    format!("{VIEWPOINT_PREAMBLE}{lowered}")
}

impl McQuestion {
    /// Builds a question from a stem and options in their original order.
    pub fn from_parts(
        stem: &str,
        options: impl IntoIterator<Item = impl AsRef<str>>,
        hint: Option<&str>,
    ) -> Result<Self, AnswerError> {
        let options: Vec<String> = options
            .into_iter()
            .map(|o| o.as_ref().split_whitespace().collect::<Vec<_>>().join(" "))
            .filter(|o| !o.is_empty())
            .collect();
        if options.len() < 2 {
            return Err(AnswerError::MalformedQuestion(format!(
                "need at least 2 options, found {}",
                options.len()
            )));
        }
        if options.len() > MAX_OPTIONS {
            return Err(AnswerError::MalformedQuestion(format!(
                "at most {MAX_OPTIONS} options supported, found {}",
                options.len()
            )));
        }
        if stem.trim().is_empty() {
            return Err(AnswerError::MalformedQuestion("empty stem".into()));
        }
        Ok(McQuestion {
            stem: ground_stem(stem),
            options: options
                .into_iter()
                .enumerate()
                .map(|(i, o)| ((b'A' + i as u8) as char, o))
                .collect(),
            hint: hint.map(str::to_string).filter(|h| !h.trim().is_empty()),
        })
    }

    pub fn num_options(&self) -> usize {
        self.options.len()
    }

    /// Stem line followed by `X. option` lines.
    pub fn to_raw(&self) -> String {
        let mut out = self.stem.clone();
        for (l, o) in &self.options {
            out.push_str(&format!("\n{l}. {o}"));
        }
        out
    }

    fn options_block(&self) -> String {
        self.options
            .iter()
            .map(|(l, o)| format!("({l}) {o}"))
            .collect::<Vec<_>>()
            .join("\n")
    }

    fn options_inline(&self) -> String {
        self.options
            .iter()
            .map(|(l, o)| format!("{l}: {o}"))
            .collect::<Vec<_>>()
            .join(" | ")
    }
}

fn option_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^\s*(?:\(([A-Za-z]|\d{1,2})\)|([A-Za-z]|\d{1,2})[.):])\s+(\S.*)$").unwrap()
    })
}

/// Parses a stem line (or lines) followed by labeled option lines. Labels
/// may be letters or numbers; options are relabeled `A..` in order.
pub fn normalize_question(raw: &str) -> Result<McQuestion, AnswerError> {
    let mut lines = raw.lines().filter(|l| !l.trim().is_empty());
    let first = lines
        .next()
        .ok_or_else(|| AnswerError::MalformedQuestion("empty input".into()))?;
    let mut stem = vec![first.trim().to_string()];
    let mut options = Vec::new();
    for line in lines {
        match option_line().captures(line) {
            Some(c) => options.push(c[3].trim().to_string()),
            None if options.is_empty() => stem.push(line.trim().to_string()),
            None => {
                return Err(AnswerError::MalformedQuestion(format!(
                    "unlabeled line after options: `{}`",
                    line.trim()
                )))
            }
        }
    }
    McQuestion::from_parts(&stem.join(" "), options, None)
}

/// `k` pairwise-distinct prompts built from the fixed templates.
pub fn render_prompt_variants(q: &McQuestion, ctx: &ContextBundle, k: usize) -> Vec<String> {
    let rendered = ctx.render();
    let context = if rendered.is_empty() {
        "(no context available)".to_string()
    } else {
        rendered
    };
    let opts = q.options_block();
    let templates = [
        format!(
            "Answer the multiple-choice question about my first-person recording using the context.\n\n\
             Context:\n{context}\n\nQuestion: {}\nOptions:\n{opts}\n\nReply with \"The answer is X\".",
            q.stem
        ),
        format!(
            "Options:\n{opts}\n\nContext:\n{context}\n\nWhich option answers this question: {}\n\
             End your reply with \"The answer is X\".",
            q.stem
        ),
        format!(
            "{context}\nQ: {}\n{}\nAnswer with the letter only:",
            q.stem,
            q.options_inline()
        ),
        format!(
            "Context:\n{context}\n\nQuestion: {}\n{opts}\n\nThink step by step about when and where each \
             relevant event happened, then conclude with \"The answer is X\".",
            q.stem
        ),
        format!(
            "Here is what I saw and heard:\n{context}\n\nIn other words, I want to know: {}\n\
             The candidates are:\n{opts}\nState your final choice as \"The answer is X\".",
            q.stem
        ),
    ];
    (0..k)
        .map(|i| {
            let base = &templates[i % templates.len()];
            match i / templates.len() {
                0 => base.clone(),
                round => format!("{base}\n(variant {})", round + 1),
            }
        })
        .collect()
}

fn choice_patterns() -> &'static [Regex; 3] {
    static PATTERNS: OnceLock<[Regex; 3]> = OnceLock::new();
    PATTERNS.get_or_init(|| {
        [
            Regex::new(r"(?i:answer\s+is)\s*:?\s*(?:\(([A-Z])\)|([A-Z])\b)").unwrap(),
            Regex::new(r"\(([A-Z])\)").unwrap(),
            Regex::new(r"(?m)^[ \t]*([A-Z])\.?[ \t]*$").unwrap(),
        ]
    })
}

/// Extracts the final answer letter: `answer is X` beats `(X)` beats a
/// line holding just `X`; within the winning pattern the last valid match
/// counts. Letters beyond `num_options` are ignored.
pub fn extract_choice(completion: &str, num_options: usize) -> Option<char> {
    let last_valid = (b'A' + num_options.min(26) as u8).saturating_sub(1) as char;
    let valid = |c: char| ('A'..=last_valid).contains(&c) && num_options > 0;
    for re in choice_patterns() {
        let found = re
            .captures_iter(completion)
            .filter_map(|c| {
                c.iter()
                    .skip(1)
                    .flatten()
                    .next()
                    .and_then(|m| m.as_str().chars().next())
            })
            .filter(|&c| valid(c))
            .last();
        if found.is_some() {
            return found;
        }
    }
    None
}

/// Most frequent letter; ties go to the alphabetically smallest.
pub fn majority_vote(votes: &[Option<char>]) -> Result<char, AnswerError> {
    let mut counts: BTreeMap<char, usize> = BTreeMap::new();
    for v in votes.iter().flatten() {
        *counts.entry(*v).or_default() += 1;
    }
    let mut best: Option<(char, usize)> = None;
    for (letter, n) in counts {
        if best.is_none_or(|(_, m)| n > m) {
            best = Some((letter, n));
        }
    }
    best.map(|(l, _)| l).ok_or(AnswerError::NoExtractableAnswer)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnswerConfig {
    pub variants: usize,
    pub use_context: bool,
    pub context: ContextConfig,
}

impl Default for AnswerConfig {
    fn default() -> Self {
        AnswerConfig {
            variants: DEFAULT_VARIANTS,
            use_context: true,
            context: ContextConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantOutcome {
    pub completion: Option<String>,
    pub error: Option<String>,
    pub extracted: Option<char>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub context_used: usize,
    pub long_term_summaries: usize,
    pub storyline_events: usize,
    pub variants: Vec<VariantOutcome>,
    pub votes_for_winner: usize,
}

/// Runs the full QA path for one question. Individual provider failures
/// become absent votes.
pub fn answer_question(
    q: &McQuestion,
    log: &EventLog,
    summarizer: &dyn Summarizer,
    lm: &dyn LanguageModel,
    budget: usize,
    now: u64,
    cfg: &AnswerConfig,
) -> Result<(char, Diagnostics), AnswerError> {
    let ctx = if cfg.use_context {
        assemble_context(&q.stem, q.hint.as_deref(), log, summarizer, budget, now, &cfg.context)?
    } else {
        ContextBundle::empty(budget)
    };
    let prompts = render_prompt_variants(q, &ctx, cfg.variants.max(1));

    let completions: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = prompts
            .iter()
            .map(|p| s.spawn(move || lm.complete(p)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("provider call panicked"))
            .collect()
    });

    let variants: Vec<VariantOutcome> = completions
        .into_iter()
        .map(|r| match r {
            Ok(text) => VariantOutcome {
                extracted: extract_choice(&text, q.num_options()),
                completion: Some(text),
                error: None,
            },
            Err(e) => VariantOutcome {
                completion: None,
                error: Some(e.to_string()),
                extracted: None,
            },
        })
        .collect();

    if variants.iter().all(|v| v.error.is_some()) {
        return Err(AnswerError::ProviderFailure(
            variants[0].error.clone().unwrap_or_default(),
        ));
    }
    let votes: Vec<Option<char>> = variants.iter().map(|v| v.extracted).collect();
    let letter = majority_vote(&votes)?;
    let diagnostics = Diagnostics {
        context_used: ctx.used,
        long_term_summaries: ctx.long_term.len(),
        storyline_events: ctx.storyline.len(),
        votes_for_winner: votes.iter().filter(|v| **v == Some(letter)).count(),
        variants,
    };
    Ok((letter, diagnostics))
}
