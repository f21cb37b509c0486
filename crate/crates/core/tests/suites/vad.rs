use egopilot_core::audio::{format_events, parse_expected, read_wav, replay, PlayingSchedule, ReplayEvent, VadConfig};

use super::Outcome;
use crate::common::fixtures::audio_cases;
use crate::oracle::vad;

pub fn reference(samples: &[i16], cfg: &VadConfig, playing: &PlayingSchedule) -> Vec<ReplayEvent> {
    vad::run(samples, &vad::Params::from_config(cfg), &|i| playing.is_playing(i))
        .into_iter()
        .map(|(chunk, kind, samples)| ReplayEvent {
            chunk,
            kind: kind.parse().unwrap(),
            samples,
        })
        .collect()
}

/// Every replay fixture matches both the reference interpretation and its
/// recorded expectation, event for event, and two runs print the same bytes.
pub fn replay_suite() -> Outcome {
    let cases = audio_cases();
    let mut events = 0;
    for c in &cases {
        let (samples, _) = read_wav(&c.wav).map_err(|e| e.to_string())?;
        let text = std::fs::read_to_string(&c.events).map_err(|e| e.to_string())?;
        let want = parse_expected(&text).map_err(|e| e.to_string())?;
        let first = replay(&samples, &c.vad, &c.playing).map_err(|e| e.to_string())?;
        let second = replay(&samples, &c.vad, &c.playing).map_err(|e| e.to_string())?;
        if format_events(&first).as_bytes() != format_events(&second).as_bytes() {
            return Err(format!("{}: two runs differ", c.name));
        }
        if first != reference(&samples, &c.vad, &c.playing) {
            return Err(format!("{}: differs from the reference interpretation", c.name));
        }
        if first != want {
            return Err(format!("{}: differs from {}", c.name, c.events.display()));
        }
        events += first.len();
    }
    for family in ["preroll", "tmin", "barge_in", "back_to_back"] {
        if !cases.iter().any(|c| c.name.starts_with(family)) {
            return Err(format!("no {family} fixture"));
        }
    }
    if cases.len() < 10 {
        return Err(format!("only {} fixtures", cases.len()));
    }
    Ok(format!("{} fixtures, {events} events exact, double run byte-identical", cases.len()))
}
