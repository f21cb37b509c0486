use std::fs;
use std::path::PathBuf;

use egopilot_core::audio::{PlayingSchedule, VadConfig};
use serde::Deserialize;

pub fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

#[derive(Deserialize)]
struct Entry {
    name: String,
    vad: VadConfig,
    playing: Vec<String>,
}

pub struct AudioCase {
    pub name: String,
    pub wav: PathBuf,
    pub events: PathBuf,
    pub vad: VadConfig,
    pub playing: PlayingSchedule,
}

pub fn audio_cases() -> Vec<AudioCase> {
    let dir = root().join("audio");
    let text = fs::read_to_string(dir.join("manifest.json")).expect("audio manifest");
    let entries: Vec<Entry> = serde_json::from_str(&text).expect("manifest parses");
    entries
        .into_iter()
        .map(|e| AudioCase {
            wav: dir.join(format!("{}.wav", e.name)),
            events: dir.join(format!("{}.events", e.name)),
            vad: e.vad,
            playing: PlayingSchedule(
                e.playing
                    .iter()
                    .map(|r| PlayingSchedule::parse_range(r).expect("range"))
                    .collect(),
            ),
            name: e.name,
        })
        .collect()
}
