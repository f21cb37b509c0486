//! Query-specific context construction.
//!
//! Long-range history is compressed into per-chunk, query-aware summaries
//! and the best of them are kept under a share of the token budget. Recent
//! or explicitly referenced time is kept verbatim as a storyline of events
//! from a narrow window. Both halves render to text lines and the rendered
//! bundle never exceeds the budget.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event_log::{Epoch, Event, EventLog, TimeWindow};
use crate::providers::{ProviderError, Summarizer};

#[derive(Debug, Error, PartialEq)]
pub enum ContextError {
    #[error("chunk duration must be positive")]
    InvalidDuration,
    #[error("token budget must be positive")]
    InvalidBudget,
    #[error("summarizer failed on chunk {window}: {source}")]
    Provider {
        window: TimeWindow,
        #[source]
        source: ProviderError,
    },
}

/// Approximate tokens: one per four characters, rounded up.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContextConfig {
    pub chunk_duration_ms: u64,
    pub summary_cap_tokens: usize,
    pub long_term_share: f64,
    pub default_window_ms: u64,
    /// Half width of the window opened around an `at HH:MM` hint.
    pub at_half_width_ms: u64,
}

impl Default for ContextConfig {
    fn default() -> Self {
        ContextConfig {
            chunk_duration_ms: 3_600_000,
            summary_cap_tokens: 64,
            long_term_share: 0.3,
            default_window_ms: 900_000,
            at_half_width_ms: 300_000,
        }
    }
}

impl ContextConfig {
    pub fn long_term_budget(&self, budget: usize) -> usize {
        (budget as f64 * self.long_term_share.clamp(0.0, 1.0)).floor() as usize
    }

    pub fn storyline_budget(&self, budget: usize) -> usize {
        budget - self.long_term_budget(budget)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub window: TimeWindow,
    pub events: Vec<Event>,
}

impl Chunk {
    /// Text handed to the summarizer: one event content per line.
    pub fn text(&self) -> String {
        self.events
            .iter()
            .map(|e| e.content.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkSummary {
    pub window: TimeWindow,
    pub text: String,
    pub relevance: f64,
}

impl ChunkSummary {
    pub fn render(&self) -> String {
        format!("[SUMMARY {}] {}", self.window, self.text)
    }
}

pub fn render_event(e: &Event) -> String {
    format!("[t={} {}] {}", e.timestamp, e.modality, e.content)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextBundle {
    pub long_term: Vec<ChunkSummary>,
    pub storyline: Vec<Event>,
    pub window: Option<TimeWindow>,
    pub budget: usize,
    pub used: usize,
}

impl ContextBundle {
    pub fn empty(budget: usize) -> Self {
        ContextBundle {
            long_term: Vec::new(),
            storyline: Vec::new(),
            window: None,
            budget,
            used: 0,
        }
    }

    pub fn render(&self) -> String {
        render_parts(&self.long_term, &self.storyline)
    }

    pub fn is_empty(&self) -> bool {
        self.long_term.is_empty() && self.storyline.is_empty()
    }
}

fn render_parts(long_term: &[ChunkSummary], storyline: &[Event]) -> String {
    long_term
        .iter()
        .map(ChunkSummary::render)
        .chain(storyline.iter().map(render_event))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Groups events into epoch-aligned chunks of `chunk_duration` ms; empty chunks are omitted.
pub fn partition_chunks(log: &EventLog, chunk_duration: u64) -> Result<Vec<Chunk>, ContextError> {
    if chunk_duration == 0 {
        return Err(ContextError::InvalidDuration);
    }
    let mut chunks: Vec<Chunk> = Vec::new();
    for e in log.events() {
        let index = e.timestamp / chunk_duration;
        match chunks.last_mut() {
            Some(c) if c.window.start / chunk_duration == index => c.events.push(e.clone()),
            _ => {
                let start = index * chunk_duration;
                chunks.push(Chunk {
                    window: TimeWindow {
                        start,
                        end: start.saturating_add(chunk_duration - 1),
                    },
                    events: vec![e.clone()],
                });
            }
        }
    }
    Ok(chunks)
}

fn truncate_chars(text: &str, max_chars: usize) -> String {
    match text.char_indices().nth(max_chars) {
        Some((byte, _)) => text[..byte].to_string(),
        None => text.to_string(),
    }
}

/// Summarizes every chunk, then greedily keeps summaries by descending
/// relevance (earlier window first on ties) until the next one would push
/// the rendered long-term section past `long_term_budget`. Summaries with
/// zero relevance are never kept. Output is chronological.
pub fn summarize_and_select(
    chunks: &[Chunk],
    query: &str,
    provider: &dyn Summarizer,
    long_term_budget: usize,
    summary_cap_tokens: usize,
) -> Result<Vec<ChunkSummary>, ContextError> {
    let mut candidates = Vec::with_capacity(chunks.len());
    for chunk in chunks {
        let s = provider
            .summarize(&chunk.text(), query)
            .map_err(|source| ContextError::Provider {
                window: chunk.window,
                source,
            })?;
        let relevance = if s.relevance.is_nan() {
            0.0
        } else {
            s.relevance.clamp(0.0, 1.0)
        };
        candidates.push(ChunkSummary {
            window: chunk.window,
            text: truncate_chars(&s.text, summary_cap_tokens * 4),
            relevance,
        });
    }
    candidates.retain(|c| c.relevance > 0.0);
    candidates.sort_by(|a, b| {
        b.relevance
            .total_cmp(&a.relevance)
            .then(a.window.start.cmp(&b.window.start))
    });

    let mut selected: Vec<ChunkSummary> = Vec::new();
    for c in candidates {
        let at = selected.partition_point(|s| s.window.start < c.window.start);
        selected.insert(at, c);
        if estimate_tokens(&render_parts(&selected, &[])) > long_term_budget {
            selected.remove(at);
            break;
        }
    }
    Ok(selected)
}

// Index of the entry considered last by the greedy order: lowest relevance,
// latest window among equals.
fn lowest_relevance_latest(selected: &[ChunkSummary]) -> usize {
    let mut idx = 0;
    for (i, s) in selected.iter().enumerate() {
        let cur = &selected[idx];
        if s.relevance < cur.relevance
            || (s.relevance == cur.relevance && s.window.start > cur.window.start)
        {
            idx = i;
        }
    }
    idx
}

fn hint_patterns() -> &'static [Regex; 3] {
    static PATTERNS: OnceLock<[Regex; 3]> = OnceLock::new();
    PATTERNS.get_or_init(|| {
        [
            Regex::new(r"(?i)\bbetween\s+(\d{1,2}):(\d{2})\s+and\s+(\d{1,2}):(\d{2})\b").unwrap(),
            Regex::new(r"(?i)\blast\s+(\d+)\s+(minutes?|seconds?)\b").unwrap(),
            Regex::new(r"(?i)\bat\s+(\d{1,2}):(\d{2})\b").unwrap(),
        ]
    })
}

fn clock_ms(h: &str, m: &str) -> Option<u64> {
    let h: u64 = h.parse().ok()?;
    let m: u64 = m.parse().ok()?;
    (h < 24 && m < 60).then_some((h * 60 + m) * 60_000)
}

/// Parses an explicit temporal hint in `text` into session-relative bounds,
/// not yet clamped to the present.
pub fn parse_hint(text: &str, epoch: Epoch, now: u64, cfg: &ContextConfig) -> Option<(u64, u64)> {
    let [between, last, at] = hint_patterns();
    if let Some(c) = between.captures(text) {
        let a = clock_ms(&c[1], &c[2])?;
        let b = clock_ms(&c[3], &c[4])?;
        let start = epoch.offset_of_time_of_day(a);
        let end = epoch.offset_of_time_of_day(b);
        return Some((start.min(end), start.max(end)));
    }
    if let Some(c) = last.captures(text) {
        let n: u64 = c[1].parse().ok()?;
        let unit = if c[2].to_lowercase().starts_with("minute") {
            60_000
        } else {
            1_000
        };
        return Some((now.saturating_sub(n.saturating_mul(unit)), now));
    }
    if let Some(c) = at.captures(text) {
        let t = epoch.offset_of_time_of_day(clock_ms(&c[1], &c[2])?);
        return Some((
            t.saturating_sub(cfg.at_half_width_ms),
            t.saturating_add(cfg.at_half_width_ms),
        ));
    }
    None
}

/// Temporal window for the storyline: an explicit hint clamped to
/// `[0, now]`, otherwise the trailing default window.
pub fn tcot_window(query: &str, epoch: Epoch, now: u64, cfg: &ContextConfig) -> TimeWindow {
    match parse_hint(query, epoch, now, cfg) {
        Some((start, end)) => TimeWindow {
            start: start.min(now),
            end: end.min(now),
        },
        None => TimeWindow {
            start: now.saturating_sub(cfg.default_window_ms),
            end: now,
        },
    }
}

/// Builds the bundle for `query`. `hint` overrides the text searched for a
/// temporal hint; when absent the query itself is searched.
pub fn assemble_context(
    query: &str,
    hint: Option<&str>,
    log: &EventLog,
    provider: &dyn Summarizer,
    budget: usize,
    now: u64,
    cfg: &ContextConfig,
) -> Result<ContextBundle, ContextError> {
    if budget == 0 {
        return Err(ContextError::InvalidBudget);
    }
    let window = tcot_window(hint.unwrap_or(query), log.epoch(), now, cfg);

    let preceding: Vec<Chunk> = partition_chunks(log, cfg.chunk_duration_ms)?
        .into_iter()
        .filter(|c| c.window.end < window.start)
        .collect();
    let mut long_term = summarize_and_select(
        &preceding,
        query,
        provider,
        cfg.long_term_budget(budget),
        cfg.summary_cap_tokens,
    )?;

    let in_window = log.query_range(window);
    let storyline_budget = cfg.storyline_budget(budget);
    let mut keep_from = in_window.len();
    while keep_from > 0 {
        let candidate = &in_window[keep_from - 1..];
        if estimate_tokens(&render_parts(&[], candidate)) > storyline_budget {
            break;
        }
        keep_from -= 1;
    }
    let mut storyline: Vec<Event> = in_window[keep_from..].to_vec();

    // The joining newline can cost one token beyond the two shares.
    while estimate_tokens(&render_parts(&long_term, &storyline)) > budget {
        if !storyline.is_empty() {
            storyline.remove(0);
        } else {
            let idx = lowest_relevance_latest(&long_term);
            long_term.remove(idx);
        }
    }

    let used = estimate_tokens(&render_parts(&long_term, &storyline));
    Ok(ContextBundle {
        long_term,
        storyline,
        window: Some(window),
        budget,
        used,
    })
}

/// Concatenates segments into one timeline starting at zero; each segment
/// begins where the previous window ended and keeps its internal offsets.
pub fn merge_timeline(segments: &[(TimeWindow, Vec<Event>)]) -> Vec<Event> {
    let mut out = Vec::new();
    let mut cursor = 0u64;
    for (window, events) in segments {
        for e in events {
            let mut shifted = e.clone();
            shifted.timestamp = cursor + e.timestamp.saturating_sub(window.start);
            out.push(shifted);
        }
        cursor += window.duration();
    }
    out
}
