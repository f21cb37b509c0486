//! Energy VAD with gain, pre-roll ring, silence timeout, minimum-length
//! filter and barge-in detection, plus the replay helpers used to check
//! it against recorded fixtures.
//!
//! Time is counted in samples, never wall clock, so a replay is exactly
//! reproducible.

use std::collections::VecDeque;
use std::fmt;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const FULL_SCALE: f64 = 32768.0;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum AudioError {
    #[error("empty audio chunk")]
    EmptyChunk,
    #[error("chunk sample rate {got} Hz does not match session rate {expected} Hz")]
    RateMismatch { expected: u32, got: u32 },
    #[error("invalid VAD config: {0}")]
    InvalidConfig(String),
    #[error("{path}: {message}")]
    Wav { path: String, message: String },
    #[error("line {line}: {reason}")]
    Expected { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioChunk {
    pub samples: Vec<i16>,
    pub sample_rate: u32,
}

impl AudioChunk {
    pub fn new(samples: Vec<i16>, sample_rate: u32) -> Self {
        AudioChunk { samples, sample_rate }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VadConfig {
    pub sample_rate: u32,
    pub chunk_samples: usize,
    pub gain: f64,
    pub theta_start: f64,
    pub theta_barge_in: f64,
    pub t_silence_ms: u64,
    pub t_min_ms: u64,
    pub preroll_ms: u64,
}

impl Default for VadConfig {
    fn default() -> Self {
        VadConfig {
            sample_rate: 16_000,
            chunk_samples: 320,
            gain: 5.0,
            theta_start: 0.10,
            theta_barge_in: 0.25,
            t_silence_ms: 700,
            t_min_ms: 250,
            preroll_ms: 300,
        }
    }
}

impl VadConfig {
    pub fn validate(&self) -> Result<(), AudioError> {
        let bad = |m: &str| Err(AudioError::InvalidConfig(m.into()));
        if self.sample_rate == 0 || self.chunk_samples == 0 {
            return bad("sample rate and chunk size must be positive");
        }
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return bad("gain must be positive");
        }
        if !(self.theta_start > 0.0 && self.theta_start <= self.theta_barge_in && self.theta_barge_in <= 1.0) {
            return bad("thresholds must satisfy 0 < theta_start <= theta_barge_in <= 1");
        }
        // Otherwise the chunk that opens a segment would not be in it.
        if self.preroll_samples() < self.chunk_samples {
            return bad("pre-roll must hold at least one chunk");
        }
        Ok(())
    }

    pub fn preroll_samples(&self) -> usize {
        (self.preroll_ms * self.sample_rate as u64 / 1000) as usize
    }

    pub fn ms_to_samples(&self, ms: u64) -> u64 {
        ms * self.sample_rate as u64 / 1000
    }

    pub fn samples_to_ms(&self, n: usize) -> f64 {
        n as f64 * 1000.0 / self.sample_rate as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VadMode {
    Idle,
    Recording,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VadState {
    pub mode: VadMode,
    pub ring: VecDeque<i16>,
    pub segment: Vec<i16>,
    /// Consecutive below-threshold samples while recording.
    pub silence_samples: u64,
}

impl Default for VadState {
    fn default() -> Self {
        VadState {
            mode: VadMode::Idle,
            ring: VecDeque::new(),
            segment: Vec::new(),
            silence_samples: 0,
        }
    }
}

impl VadState {
    pub fn silence_elapsed_ms(&self, cfg: &VadConfig) -> f64 {
        self.silence_samples as f64 * 1000.0 / cfg.sample_rate as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VadEvent {
    HaltPlayback,
    Dispatch(Vec<i16>),
}

impl VadEvent {
    pub fn kind(&self) -> EventKind {
        match self {
            VadEvent::HaltPlayback => EventKind::Halt,
            VadEvent::Dispatch(_) => EventKind::Dispatch,
        }
    }
}

/// Peak amplitude after gain as a fraction of full scale, capped at 1.
pub fn amplitude(samples: &[i16], gain: f64) -> Result<f64, AudioError> {
    let peak = samples
        .iter()
        .map(|&s| (s as i32).unsigned_abs())
        .max()
        .ok_or(AudioError::EmptyChunk)?;
    Ok((gain * peak as f64 / FULL_SCALE).min(1.0))
}

fn apply_gain(samples: &[i16], gain: f64) -> impl Iterator<Item = i16> + '_ {
    samples
        .iter()
        .map(move |&s| (s as f64 * gain).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16)
}

/// One step of the state machine. Pure: the input state is untouched.
pub fn process_chunk(
    state: &VadState,
    chunk: &AudioChunk,
    cfg: &VadConfig,
    playing: bool,
) -> Result<(VadState, Vec<VadEvent>), AudioError> {
    if chunk.sample_rate != cfg.sample_rate {
        return Err(AudioError::RateMismatch {
            expected: cfg.sample_rate,
            got: chunk.sample_rate,
        });
    }
    let a = amplitude(&chunk.samples, cfg.gain)?;
    let mut s = state.clone();
    let mut events = Vec::new();

    let cap = cfg.preroll_samples();
    s.ring.extend(apply_gain(&chunk.samples, cfg.gain));
    let excess = s.ring.len().saturating_sub(cap);
    s.ring.drain(..excess);

    if playing && a > cfg.theta_barge_in {
        events.push(VadEvent::HaltPlayback);
    }

    match s.mode {
        VadMode::Idle => {
            if a > cfg.theta_start {
                s.mode = VadMode::Recording;
                s.segment = s.ring.iter().copied().collect();
                s.silence_samples = 0;
            }
        }
        VadMode::Recording => {
            s.segment.extend(apply_gain(&chunk.samples, cfg.gain));
            if a < cfg.theta_start {
                s.silence_samples += chunk.samples.len() as u64;
                if s.silence_samples >= cfg.ms_to_samples(cfg.t_silence_ms) {
                    let segment = std::mem::take(&mut s.segment);
                    if segment.len() as u64 > cfg.ms_to_samples(cfg.t_min_ms) {
                        events.push(VadEvent::Dispatch(segment));
                    }
                    s.mode = VadMode::Idle;
                    s.silence_samples = 0;
                }
            } else {
                s.silence_samples = 0;
            }
        }
    }
    Ok((s, events))
}

/// Owning wrapper around [`process_chunk`] for streaming use.
#[derive(Debug, Clone)]
pub struct Vad {
    cfg: VadConfig,
    state: VadState,
}

impl Vad {
    pub fn new(cfg: VadConfig) -> Result<Self, AudioError> {
        cfg.validate()?;
        Ok(Vad {
            cfg,
            state: VadState::default(),
        })
    }

    pub fn config(&self) -> &VadConfig {
        &self.cfg
    }

    pub fn state(&self) -> &VadState {
        &self.state
    }

    pub fn process(&mut self, samples: &[i16], playing: bool) -> Result<Vec<VadEvent>, AudioError> {
        let chunk = AudioChunk::new(samples.to_vec(), self.cfg.sample_rate);
        let (next, events) = process_chunk(&self.state, &chunk, &self.cfg, playing)?;
        self.state = next;
        Ok(events)
    }

    pub fn reset(&mut self) {
        self.state = VadState::default();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Halt,
    Dispatch,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Halt => "halt",
            EventKind::Dispatch => "dispatch",
        })
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "halt" => Ok(EventKind::Halt),
            "dispatch" => Ok(EventKind::Dispatch),
            other => Err(format!("unknown event kind `{other}`")),
        }
    }
}

/// One line of an expected-events fixture. `samples` is the dispatched
/// segment length and is only compared when present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayEvent {
    pub chunk: usize,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

impl fmt::Display for ReplayEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}", self.chunk, self.kind)?;
        if let Some(n) = self.samples {
            write!(f, "\t{n}")?;
        }
        Ok(())
    }
}

/// Parses `chunk_index<TAB>kind[<TAB>samples]` lines; blank lines and
/// `#` comments are skipped.
pub fn parse_expected(text: &str) -> Result<Vec<ReplayEvent>, AudioError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let err = |reason: String| AudioError::Expected { line: i + 1, reason };
        let cols: Vec<&str> = line.split('\t').collect();
        if !(2..=3).contains(&cols.len()) {
            return Err(err(format!("expected 2 or 3 tab-separated columns, found {}", cols.len())));
        }
        let chunk = cols[0]
            .trim()
            .parse()
            .map_err(|_| err(format!("bad chunk index `{}`", cols[0])))?;
        let kind = cols[1].trim().parse().map_err(err)?;
        let samples = match cols.get(2) {
            Some(c) => Some(c.trim().parse().map_err(|_| err(format!("bad sample count `{c}`")))?),
            None => None,
        };
        out.push(ReplayEvent { chunk, kind, samples });
    }
    Ok(out)
}

pub fn format_events(events: &[ReplayEvent]) -> String {
    events.iter().map(|e| format!("{e}\n")).collect()
}

/// Chunk-index ranges during which playback is active.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PlayingSchedule(pub Vec<Range<usize>>);

impl PlayingSchedule {
    pub fn is_playing(&self, chunk: usize) -> bool {
        self.0.iter().any(|r| r.contains(&chunk))
    }

    /// Parses `START..END` (end exclusive).
    pub fn parse_range(s: &str) -> Result<Range<usize>, String> {
        let (a, b) = s.split_once("..").ok_or_else(|| format!("`{s}` is not START..END"))?;
        let a: usize = a.trim().parse().map_err(|_| format!("bad start in `{s}`"))?;
        let b: usize = b.trim().parse().map_err(|_| format!("bad end in `{s}`"))?;
        if b < a {
            return Err(format!("empty range `{s}`"));
        }
        Ok(a..b)
    }
}

/// Splits `samples` into config-sized chunks (the last may be short) and
/// runs them through a fresh state machine.
pub fn replay(samples: &[i16], cfg: &VadConfig, playing: &PlayingSchedule) -> Result<Vec<ReplayEvent>, AudioError> {
    cfg.validate()?;
    let mut state = VadState::default();
    let mut out = Vec::new();
    for (i, piece) in samples.chunks(cfg.chunk_samples).enumerate() {
        let chunk = AudioChunk::new(piece.to_vec(), cfg.sample_rate);
        let (next, events) = process_chunk(&state, &chunk, cfg, playing.is_playing(i))?;
        state = next;
        for e in events {
            out.push(ReplayEvent {
                chunk: i,
                kind: e.kind(),
                samples: match &e {
                    VadEvent::Dispatch(seg) => Some(seg.len()),
                    VadEvent::HaltPlayback => None,
                },
            });
        }
    }
    Ok(out)
}

/// First position where `actual` departs from `expected`, as
/// (event position, chunk index). Sample counts are compared only where
/// the expectation gives one.
pub fn first_divergence(expected: &[ReplayEvent], actual: &[ReplayEvent]) -> Option<(usize, usize)> {
    let n = expected.len().max(actual.len());
    for i in 0..n {
        match (expected.get(i), actual.get(i)) {
            (Some(e), Some(a)) => {
                let same = e.chunk == a.chunk && e.kind == a.kind && e.samples.is_none_or(|n| Some(n) == a.samples);
                if !same {
                    return Some((i, e.chunk.min(a.chunk)));
                }
            }
            (Some(e), None) => return Some((i, e.chunk)),
            (None, Some(a)) => return Some((i, a.chunk)),
            (None, None) => unreachable!(),
        }
    }
    None
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<(Vec<i16>, u32), AudioError> {
    let path = path.as_ref();
    let err = |message: String| AudioError::Wav {
        path: path.display().to_string(),
        message,
    };
    let mut reader = hound::WavReader::open(path).map_err(|e| err(e.to_string()))?;
    let spec = reader.spec();
    if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(err(format!(
            "expected mono 16-bit PCM, got {} channel(s) of {}-bit {:?}",
            spec.channels, spec.bits_per_sample, spec.sample_format
        )));
    }
    let samples = reader
        .samples::<i16>()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| err(e.to_string()))?;
    Ok((samples, spec.sample_rate))
}

pub fn write_wav(path: impl AsRef<Path>, samples: &[i16], sample_rate: u32) -> Result<(), AudioError> {
    let path = path.as_ref();
    let err = |e: hound::Error| AudioError::Wav {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(err)?;
    for &s in samples {
        w.write_sample(s).map_err(err)?;
    }
    w.finalize().map_err(err)
}

/// Signal builders for fixtures and tests.
pub mod synth {
    /// `ms` of digital silence.
    pub fn silence(ms: u64, rate: u32) -> Vec<i16> {
        vec![0; (ms * rate as u64 / 1000) as usize]
    }

    /// A sine tone of peak `amplitude` (raw sample units).
    pub fn tone(ms: u64, rate: u32, freq_hz: f64, amplitude: i16) -> Vec<i16> {
        let n = (ms * rate as u64 / 1000) as usize;
        (0..n)
            .map(|i| {
                let t = i as f64 / rate as f64;
                (amplitude as f64 * (2.0 * std::f64::consts::PI * freq_hz * t).sin()).round() as i16
            })
            .collect()
    }

    /// A constant-magnitude square wave; every chunk reaches the peak.
    pub fn square(ms: u64, rate: u32, amplitude: i16) -> Vec<i16> {
        let n = (ms * rate as u64 / 1000) as usize;
        (0..n).map(|i| if i % 2 == 0 { amplitude } else { -amplitude }).collect()
    }
}
