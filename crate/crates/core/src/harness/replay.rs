//! Audio state-machine conformance: replay a WAV and diff the events.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde_json::json;

use super::{HarnessError, ItemOutcome, RunReport};
use crate::audio::{first_divergence, format_events, parse_expected, read_wav, replay, AudioError, PlayingSchedule, VadConfig};

pub fn replay_audio(
    wav: impl AsRef<Path>,
    expected: impl AsRef<Path>,
    cfg: &VadConfig,
    playing: &PlayingSchedule,
) -> Result<RunReport, HarnessError> {
    let started = Instant::now();
    let (samples, rate) = read_wav(wav.as_ref())?;
    if rate != cfg.sample_rate {
        return Err(AudioError::RateMismatch {
            expected: cfg.sample_rate,
            got: rate,
        }
        .into());
    }
    let exp_path = expected.as_ref();
    let text = fs::read_to_string(exp_path).map_err(|e| HarnessError::Io {
        path: exp_path.display().to_string(),
        message: e.to_string(),
    })?;
    let want = parse_expected(&text)?;
    let got = replay(&samples, cfg, playing)?;
    let divergence = first_divergence(&want, &got);

    let n = want.len().max(got.len());
    let items = (0..n)
        .map(|i| {
            let ok = match divergence {
                Some((pos, _)) => i < pos,
                None => true,
            };
            ItemOutcome {
                id: format!("event-{i}"),
                passed: ok,
                score: if ok { 1.0 } else { 0.0 },
                detail: json!({
                    "expected": want.get(i).map(ToString::to_string),
                    "actual": got.get(i).map(ToString::to_string),
                }),
            }
        })
        .collect();
    let mut report = RunReport::new(
        "replay-audio",
        json!({
            "wav": wav.as_ref().display().to_string(),
            "expected": exp_path.display().to_string(),
            "vad": cfg,
            "playing": playing.0.iter().map(|r| format!("{}..{}", r.start, r.end)).collect::<Vec<_>>(),
        }),
        items,
    );
    report.passed = divergence.is_none();
    report.metrics.insert("chunks".into(), samples.len().div_ceil(cfg.chunk_samples) as f64);
    report.metrics.insert("events_expected".into(), want.len() as f64);
    report.metrics.insert("events_actual".into(), got.len() as f64);
    if let Some((pos, chunk)) = divergence {
        report.metrics.insert("first_divergent_event".into(), pos as f64);
        report.metrics.insert("first_divergent_chunk".into(), chunk as f64);
        tracing::info!(actual = %format_events(&got), "replay diverged");
    }
    report.wall = started.elapsed();
    Ok(report)
}
