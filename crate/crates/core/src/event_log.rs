//! Chronologically sorted multimodal event log.
//!
//! Every narration line and spoken transcript becomes an [`Event`] with a
//! millisecond timestamp relative to the session epoch. The log keeps events
//! sorted by timestamp at all times; late arrivals are inserted at their
//! sorted position, after any events that share their timestamp.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const DAY_MS: u64 = 86_400_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EventLogError {
    #[error("event content is empty after normalization")]
    EmptyContent,
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid time window: start {start} > end {end}")]
    InvalidWindow { start: u64, end: u64 },
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Visual,
    Spoken,
}

impl Modality {
    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Visual => "visual",
            Modality::Spoken => "spoken",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "visual" => Ok(Modality::Visual),
            "spoken" => Ok(Modality::Spoken),
            other => Err(format!("unknown modality `{other}`")),
        }
    }
}

/// Trim and collapse internal whitespace runs to a single space.
pub fn normalize_content(raw: &str) -> String {
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// One first-person record: when, through which channel, and what.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub timestamp: u64,
    pub modality: Modality,
    pub content: String,
    pub source_id: String,
}

impl Event {
    /// Builds an event with normalized content.
    pub fn new(
        timestamp: u64,
        modality: Modality,
        source_id: impl Into<String>,
        content: &str,
    ) -> Result<Self, EventLogError> {
        let content = normalize_content(content);
        if content.is_empty() {
            return Err(EventLogError::EmptyContent);
        }
        Ok(Event {
            timestamp,
            modality,
            content,
            source_id: normalize_content(&source_id.into()),
        })
    }

    /// `timestamp_ms \t modality \t source_id \t content`
    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}",
            self.timestamp, self.modality, self.source_id, self.content
        )
    }

    fn from_line(line: &str, line_no: usize) -> Result<Self, EventLogError> {
        let parse_err = |reason: String| EventLogError::Parse {
            line: line_no,
            reason,
        };
        let fields: Vec<&str> = line.splitn(4, '\t').collect();
        if fields.len() != 4 {
            return Err(parse_err(format!(
                "expected 4 tab-separated fields, found {}",
                fields.len()
            )));
        }
        let timestamp = fields[0]
            .trim()
            .parse::<u64>()
            .map_err(|e| parse_err(format!("bad timestamp `{}`: {e}", fields[0])))?;
        let modality = fields[1].trim().parse::<Modality>().map_err(parse_err)?;
        Event::new(timestamp, modality, fields[2], fields[3])
            .map_err(|e| parse_err(e.to_string()))
    }
}

/// Inclusive range of session milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: u64,
    pub end: u64,
}

impl TimeWindow {
    pub fn new(start: u64, end: u64) -> Result<Self, EventLogError> {
        if start > end {
            return Err(EventLogError::InvalidWindow { start, end });
        }
        Ok(TimeWindow { start, end })
    }

    pub fn contains(&self, t: u64) -> bool {
        self.start <= t && t <= self.end
    }

    pub fn duration(&self) -> u64 {
        self.end - self.start
    }
}

impl fmt::Display for TimeWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\u{2013}{}", self.start, self.end)
    }
}

/// Wall-clock instant that session timestamp zero corresponds to, in Unix ms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Epoch(pub u64);

impl Epoch {
    pub fn from_time_of_day(hours: u64, minutes: u64, seconds: u64) -> Self {
        Epoch(((hours * 60 + minutes) * 60 + seconds) * 1000)
    }

    /// Parses `HH:MM` or `HH:MM:SS` as a time of day on the Unix epoch date.
    pub fn parse_time_of_day(text: &str) -> Option<Self> {
        let parts: Vec<u64> = text
            .trim()
            .split(':')
            .map(|p| p.parse().ok())
            .collect::<Option<_>>()?;
        match parts.as_slice() {
            [h, m] if *h < 24 && *m < 60 => Some(Epoch::from_time_of_day(*h, *m, 0)),
            [h, m, s] if *h < 24 && *m < 60 && *s < 60 => Some(Epoch::from_time_of_day(*h, *m, *s)),
            _ => None,
        }
    }

    pub fn time_of_day_ms(&self) -> u64 {
        self.0 % DAY_MS
    }

    /// Session offset of the next occurrence of `tod_ms` at or after the epoch.
    pub fn offset_of_time_of_day(&self, tod_ms: u64) -> u64 {
        let base = self.time_of_day_ms();
        if tod_ms >= base {
            tod_ms - base
        } else {
            tod_ms + DAY_MS - base
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLog {
    events: Vec<Event>,
    epoch: Epoch,
}

impl EventLog {
    pub fn new(epoch: Epoch) -> Self {
        EventLog {
            events: Vec::new(),
            epoch,
        }
    }

    pub fn from_events(epoch: Epoch, events: impl IntoIterator<Item = Event>) -> Self {
        let mut log = EventLog::new(epoch);
        for e in events {
            log.append(e);
        }
        log
    }

    pub fn epoch(&self) -> Epoch {
        self.epoch
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Stable sorted insert; equal timestamps keep arrival order.
    pub fn append(&mut self, event: Event) {
        let at = self
            .events
            .partition_point(|e| e.timestamp <= event.timestamp);
        self.events.insert(at, event);
    }

    /// Normalizes and appends a raw record.
    pub fn append_raw(
        &mut self,
        timestamp: u64,
        modality: Modality,
        source_id: &str,
        content: &str,
    ) -> Result<(), EventLogError> {
        self.append(Event::new(timestamp, modality, source_id, content)?);
        Ok(())
    }

    pub fn query_range(&self, window: TimeWindow) -> &[Event] {
        let lo = self.events.partition_point(|e| e.timestamp < window.start);
        let hi = self.events.partition_point(|e| e.timestamp <= window.end);
        if lo >= hi {
            &[]
        } else {
            &self.events[lo..hi]
        }
    }

    /// Window from the first to the last timestamp, if any.
    pub fn span(&self) -> Option<TimeWindow> {
        Some(TimeWindow {
            start: self.events.first()?.timestamp,
            end: self.events.last()?.timestamp,
        })
    }

    pub fn last_timestamp(&self) -> Option<u64> {
        self.events.last().map(|e| e.timestamp)
    }

    pub fn parse(text: &str, epoch: Epoch) -> Result<Self, EventLogError> {
        let mut log = EventLog::new(epoch);
        for (i, line) in text.lines().enumerate() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.trim().is_empty() {
                continue;
            }
            log.append(Event::from_line(line, i + 1)?);
        }
        Ok(log)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&e.to_line());
            out.push('\n');
        }
        out
    }
}

/// Reads a tab-separated log file; see [`Event::to_line`] for the layout.
pub fn ingest_log_file(path: impl AsRef<Path>, epoch: Epoch) -> Result<EventLog, EventLogError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| EventLogError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    EventLog::parse(&text, epoch)
}
