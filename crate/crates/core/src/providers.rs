//! Model provider interfaces and the deterministic scripted stubs used by
//! tests, harnesses and the demo server.
//!
//! A [`StubTable`] is an ordered list of `(substring pattern, response)`
//! pairs plus a default response; lookup returns the response of the first
//! pattern contained in the input. A response starting with `!error` makes
//! the stub fail with the remainder of the line as its message.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use thiserror::Error;

pub const ERROR_SENTINEL: &str = "!error";

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ProviderError {
    #[error("provider failure: {0}")]
    Failure(String),
    #[error("provider timed out after {0} ms")]
    Timeout(u64),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StubTableError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("stub table {path}: {message}")]
    Io { path: String, message: String },
}

/// Text completion model.
pub trait LanguageModel: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, ProviderError>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub text: String,
    pub relevance: f64,
}

/// Query-aware chunk summarizer.
pub trait Summarizer: Send + Sync {
    fn summarize(&self, chunk_text: &str, query: &str) -> Result<Summary, ProviderError>;
}

pub trait SpeechRecognizer: Send + Sync {
    fn transcribe(&self, samples: &[i16], sample_rate: u32) -> Result<String, ProviderError>;
}

pub trait SpeechSynthesizer: Send + Sync {
    fn synthesize(&self, text: &str) -> Result<Vec<u8>, ProviderError>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StubTable {
    entries: Vec<(String, String)>,
    default: String,
}

impl StubTable {
    pub fn new(default: impl Into<String>) -> Self {
        StubTable {
            entries: Vec::new(),
            default: default.into(),
        }
    }

    /// Appends an entry. Empty patterns are ignored since they would match everything.
    pub fn with(mut self, pattern: impl Into<String>, response: impl Into<String>) -> Self {
        self.push(pattern, response);
        self
    }

    pub fn push(&mut self, pattern: impl Into<String>, response: impl Into<String>) {
        let pattern = pattern.into();
        if !pattern.is_empty() {
            self.entries.push((pattern, response.into()));
        }
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn default_response(&self) -> &str {
        &self.default
    }

    /// First-match lookup.
    pub fn lookup(&self, input: &str) -> &str {
        self.entries
            .iter()
            .find(|(p, _)| input.contains(p.as_str()))
            .map(|(_, r)| r.as_str())
            .unwrap_or(&self.default)
    }

    /// Parses `pattern <TAB> response` lines ending with `DEFAULT <TAB> response`.
    ///
    /// `\n`, `\t` and `\\` escapes are decoded in responses. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self, StubTableError> {
        let mut entries = Vec::new();
        let mut default = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            if default.is_some() {
                return Err(StubTableError::Parse {
                    line: line_no,
                    reason: "entries after the DEFAULT line".into(),
                });
            }
            let (pattern, response) = line.split_once('\t').ok_or(StubTableError::Parse {
                line: line_no,
                reason: "expected `pattern<TAB>response`".into(),
            })?;
            let response = unescape(response);
            if pattern == "DEFAULT" {
                default = Some(response);
            } else if pattern.is_empty() {
                return Err(StubTableError::Parse {
                    line: line_no,
                    reason: "empty pattern".into(),
                });
            } else {
                entries.push((pattern.to_string(), response));
            }
        }
        let default = default.ok_or(StubTableError::Parse {
            line: text.lines().count() + 1,
            reason: "missing DEFAULT line".into(),
        })?;
        Ok(StubTable { entries, default })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (p, r) in &self.entries {
            out.push_str(&format!("{p}\t{}\n", escape(r)));
        }
        out.push_str(&format!("DEFAULT\t{}\n", escape(&self.default)));
        out
    }
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\")
        .replace('\n', "\\n")
        .replace('\t', "\\t")
}

pub fn load_stub_table(path: impl AsRef<Path>) -> Result<StubTable, StubTableError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| StubTableError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    StubTable::parse(&text)
}

/// First-match completion over a stub table.
pub fn stub_complete(table: &StubTable, prompt: &str) -> Result<String, ProviderError> {
    let response = table.lookup(prompt);
    match response.strip_prefix(ERROR_SENTINEL) {
        Some(rest) => Err(ProviderError::Failure(rest.trim().to_string())),
        None => Ok(response.to_string()),
    }
}

#[derive(Debug, Clone)]
pub struct StubLanguageModel {
    table: StubTable,
}

impl StubLanguageModel {
    pub fn new(table: StubTable) -> Self {
        StubLanguageModel { table }
    }

    pub fn table(&self) -> &StubTable {
        &self.table
    }
}

impl LanguageModel for StubLanguageModel {
    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        stub_complete(&self.table, prompt)
    }
}

/// Words too common to carry relevance.
const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "at", "did", "do", "does", "for", "from", "how", "i", "in", "is",
    "it", "me", "my", "of", "on", "or", "the", "this", "that", "to", "was", "what", "when",
    "where", "which", "who", "why", "with", "you",
];

/// Lowercased non-stopword tokens.
pub fn keywords(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric() && c != '-')
        .map(|w| w.trim_matches('-').to_lowercase())
        .filter(|w| !w.is_empty() && !STOPWORDS.contains(&w.as_str()))
        .collect()
}

/// Reference summarizer: relevance is the fraction of query keywords found
/// in the chunk, and the summary keeps the chunk lines with the largest
/// keyword overlap, most overlapping first, within `max_chars`.
#[derive(Debug, Clone)]
pub struct KeywordSummarizer {
    pub max_chars: usize,
}

impl Default for KeywordSummarizer {
    fn default() -> Self {
        KeywordSummarizer { max_chars: 256 }
    }
}

impl Summarizer for KeywordSummarizer {
    fn summarize(&self, chunk_text: &str, query: &str) -> Result<Summary, ProviderError> {
        let query_kw = keywords(query);
        let chunk_kw = keywords(chunk_text);
        let relevance = if query_kw.is_empty() {
            0.0
        } else {
            query_kw.intersection(&chunk_kw).count() as f64 / query_kw.len() as f64
        };

        let mut scored: Vec<(usize, usize, &str)> = chunk_text
            .lines()
            .enumerate()
            .map(|(i, line)| (keywords(line).intersection(&query_kw).count(), i, line))
            .filter(|(overlap, _, _)| *overlap > 0)
            .collect();
        scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));

        let mut text = String::new();
        for (_, _, line) in scored {
            let line = line.trim();
            let extra = if text.is_empty() { 0 } else { 2 };
            if text.chars().count() + extra + line.chars().count() > self.max_chars {
                continue;
            }
            if !text.is_empty() {
                text.push_str("; ");
            }
            text.push_str(line);
        }
        Ok(Summary { text, relevance })
    }
}

/// Stateless ASR stub: the lookup key is `segment ms=<duration>`.
#[derive(Debug, Clone)]
pub struct StubRecognizer {
    table: StubTable,
}

impl StubRecognizer {
    pub fn new(table: StubTable) -> Self {
        StubRecognizer { table }
    }

    pub fn segment_key(samples: usize, sample_rate: u32) -> String {
        format!("segment ms={}", samples as u64 * 1000 / sample_rate.max(1) as u64)
    }
}

impl SpeechRecognizer for StubRecognizer {
    fn transcribe(&self, samples: &[i16], sample_rate: u32) -> Result<String, ProviderError> {
        stub_complete(&self.table, &Self::segment_key(samples.len(), sample_rate))
    }
}

/// Pass-through TTS: the "audio" is the UTF-8 text.
#[derive(Debug, Clone, Default)]
pub struct PassThroughSynthesizer;

impl SpeechSynthesizer for PassThroughSynthesizer {
    fn synthesize(&self, text: &str) -> Result<Vec<u8>, ProviderError> {
        Ok(text.as_bytes().to_vec())
    }
}

#[cfg(feature = "http-provider")]
pub use http::HttpLanguageModel;

#[cfg(feature = "http-provider")]
mod http {
    use std::time::Duration;

    use super::{LanguageModel, ProviderError};

    pub const ENV_URL: &str = "EGOPILOT_LLM_URL";
    pub const ENV_KEY: &str = "EGOPILOT_LLM_KEY";
    pub const ENV_MODEL: &str = "EGOPILOT_LLM_MODEL";
    pub const ENV_TIMEOUT_MS: &str = "EGOPILOT_LLM_TIMEOUT_MS";

    /// Chat-completions style HTTP endpoint. One request at a time per instance.
    pub struct HttpLanguageModel {
        url: String,
        key: Option<String>,
        model: String,
        timeout_ms: u64,
        agent: std::sync::Mutex<ureq::Agent>,
    }

    impl HttpLanguageModel {
        pub fn from_env() -> Result<Self, ProviderError> {
            let url = std::env::var(ENV_URL)
                .map_err(|_| ProviderError::Failure(format!("{ENV_URL} is not set")))?;
            let timeout_ms = std::env::var(ENV_TIMEOUT_MS)
                .ok()
                .and_then(|v| v.parse().ok())
                .unwrap_or(30_000);
            let agent = ureq::Agent::config_builder()
                .timeout_global(Some(Duration::from_millis(timeout_ms)))
                .build()
                .into();
            Ok(HttpLanguageModel {
                url,
                key: std::env::var(ENV_KEY).ok(),
                model: std::env::var(ENV_MODEL).unwrap_or_else(|_| "default".into()),
                timeout_ms,
                agent: std::sync::Mutex::new(agent),
            })
        }
    }

    impl LanguageModel for HttpLanguageModel {
        fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
            let body = serde_json::json!({
                "model": self.model,
                "messages": [{"role": "user", "content": prompt}],
            });
            let agent = self.agent.lock().expect("http agent poisoned");
            let mut req = agent.post(&self.url);
            if let Some(key) = &self.key {
                req = req.header("Authorization", &format!("Bearer {key}"));
            }
            let mut resp = req.send_json(&body).map_err(|e| match e {
                ureq::Error::Timeout(_) => ProviderError::Timeout(self.timeout_ms),
                other => ProviderError::Failure(other.to_string()),
            })?;
            let value: serde_json::Value = resp
                .body_mut()
                .read_json()
                .map_err(|e| ProviderError::Failure(e.to_string()))?;
            value["choices"][0]["message"]["content"]
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| ProviderError::Failure("response has no completion text".into()))
        }
    }
}
