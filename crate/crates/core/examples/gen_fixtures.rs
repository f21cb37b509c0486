//! Regenerates the files under `fixtures/`: audio replay cases with their
//! expected events, the 50-question synthetic QA set and the demo config.
//!
//! cargo run -p egopilot-core --example gen_fixtures [-- OUT_DIR]

#[path = "../tests/oracle/vad.rs"]
mod vad_ref;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Result;
use egopilot_core::audio::{synth, write_wav, PlayingSchedule, VadConfig};
use egopilot_core::config::AppConfig;
use egopilot_core::harness::synthetic_qa;
use serde_json::{json, Value};

const RATE: u32 = 16_000;

enum Part {
    Silence(u64),
    Square(u64, i16),
    Sine(u64, f64, i16),
}
use Part::*;

struct Case {
    name: &'static str,
    about: &'static str,
    vad: Value,
    playing: &'static [&'static str],
    parts: Vec<Part>,
}

fn render(parts: &[Part]) -> Vec<i16> {
    let mut out = Vec::new();
    for p in parts {
        out.extend(match *p {
            Silence(ms) => synth::silence(ms, RATE),
            Square(ms, amp) => synth::square(ms, RATE, amp),
            Sine(ms, hz, amp) => synth::tone(ms, RATE, hz, amp),
        });
    }
    out
}

fn cases() -> Vec<Case> {
    let strict_min = json!({"t_silence_ms": 300, "t_min_ms": 1000});
    vec![
        Case {
            name: "preroll_basic",
            about: "one utterance after 300 ms of silence; the segment starts with the full pre-roll",
            vad: json!({}),
            playing: &[],
            parts: vec![Silence(300), Square(400, 1000), Silence(800)],
        },
        Case {
            name: "preroll_partial",
            about: "speech starts before the ring is full",
            vad: json!({}),
            playing: &[],
            parts: vec![Silence(100), Square(400, 1000), Silence(800)],
        },
        Case {
            name: "preroll_at_start",
            about: "speech in the very first chunk",
            vad: json!({}),
            playing: &[],
            parts: vec![Square(400, 1000), Silence(800)],
        },
        Case {
            name: "back_to_back",
            about: "two utterances separated by more than the silence timeout",
            vad: json!({}),
            playing: &[],
            parts: vec![Silence(300), Square(400, 1000), Silence(800), Square(400, 1000), Silence(800)],
        },
        Case {
            name: "back_to_back_tight",
            about: "gaps of exactly the silence timeout",
            vad: json!({}),
            playing: &[],
            parts: vec![Silence(200), Square(300, 1000), Silence(700), Square(300, 1000), Silence(700)],
        },
        Case {
            name: "pause_bridged",
            about: "a pause shorter than the timeout keeps one segment",
            vad: json!({}),
            playing: &[],
            parts: vec![Square(400, 1000), Silence(500), Square(400, 1000), Silence(800)],
        },
        Case {
            name: "tmin_drop",
            about: "a blip shorter than the minimum duration is dropped",
            vad: strict_min.clone(),
            playing: &[],
            parts: vec![Silence(300), Square(200, 1000), Silence(400)],
        },
        Case {
            name: "tmin_keep",
            about: "a long enough utterance passes the minimum duration",
            vad: strict_min.clone(),
            playing: &[],
            parts: vec![Silence(300), Square(800, 1000), Silence(400)],
        },
        Case {
            name: "tmin_mixed",
            about: "drop, keep, drop",
            vad: strict_min,
            playing: &[],
            parts: vec![
                Silence(300),
                Square(200, 1000),
                Silence(400),
                Square(900, 1000),
                Silence(400),
                Square(100, 1000),
                Silence(400),
            ],
        },
        Case {
            name: "barge_in_playing",
            about: "loud speech during playback halts on every loud chunk",
            vad: json!({}),
            playing: &["0..60"],
            parts: vec![Silence(300), Square(400, 2000), Silence(800)],
        },
        Case {
            name: "barge_in_quiet",
            about: "speech above the start threshold but below the barge-in threshold",
            vad: json!({}),
            playing: &["0..80"],
            parts: vec![Silence(300), Square(400, 1000), Silence(800)],
        },
        Case {
            name: "barge_in_not_playing",
            about: "loud speech with no playback never halts",
            vad: json!({}),
            playing: &[],
            parts: vec![Silence(300), Square(400, 2000), Silence(800)],
        },
        Case {
            name: "barge_in_mid_recording",
            about: "playback starts while recording; the segment is unaffected",
            vad: json!({}),
            playing: &["25..40"],
            parts: vec![Silence(300), Square(600, 2000), Silence(800)],
        },
        Case {
            name: "silence_only",
            about: "nothing to report",
            vad: json!({}),
            playing: &["0..100"],
            parts: vec![Silence(2000)],
        },
        Case {
            name: "unfinished",
            about: "the stream ends before the silence timeout",
            vad: json!({}),
            playing: &[],
            parts: vec![Silence(300), Square(400, 1000), Silence(300)],
        },
        Case {
            name: "saturated",
            about: "full-scale input clips after gain",
            vad: json!({}),
            playing: &["10..30"],
            parts: vec![Silence(300), Square(400, 32767), Silence(800)],
        },
        Case {
            name: "sine_speech",
            about: "a tone instead of a square wave",
            vad: json!({}),
            playing: &[],
            parts: vec![Silence(300), Sine(500, 220.0, 1500), Silence(800)],
        },
        Case {
            name: "short_last_chunk",
            about: "the stream length is not a whole number of chunks",
            vad: json!({}),
            playing: &[],
            parts: vec![Silence(310), Square(400, 1000), Silence(810)],
        },
    ]
}

fn write_audio(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut manifest = Vec::new();
    for c in cases() {
        let samples = render(&c.parts);
        write_wav(dir.join(format!("{}.wav", c.name)), &samples, RATE)?;
        let cfg: VadConfig = serde_json::from_value(c.vad.clone())?;
        let schedule = PlayingSchedule(
            c.playing
                .iter()
                .map(|r| PlayingSchedule::parse_range(r).map_err(anyhow::Error::msg))
                .collect::<Result<_>>()?,
        );
        let events = vad_ref::run(&samples, &vad_ref::Params::from_config(&cfg), &|i| schedule.is_playing(i));
        let mut text = format!("# {}\n", c.about);
        for (chunk, kind, n) in events {
            match n {
                Some(n) => text.push_str(&format!("{chunk}\t{kind}\t{n}\n")),
                None => text.push_str(&format!("{chunk}\t{kind}\n")),
            }
        }
        fs::write(dir.join(format!("{}.events", c.name)), text)?;
        manifest.push(json!({"name": c.name, "vad": c.vad, "playing": c.playing}));
    }
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

fn write_qa(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let syn = synthetic_qa(50, 11);
    let jsonl: String = syn
        .records
        .iter()
        .map(|r| serde_json::to_string(r).map(|s| s + "\n"))
        .collect::<Result<_, _>>()?;
    fs::write(dir.join("qa50.jsonl"), jsonl)?;
    fs::write(dir.join("qa50.log"), syn.log.to_text())?;
    fs::write(dir.join("qa50.lm.tsv"), syn.lm_table.to_text())?;
    Ok(())
}

fn main() -> Result<()> {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"));
    write_audio(&root.join("audio"))?;
    write_qa(&root.join("qa"))?;
    fs::create_dir_all(root.join("demo"))?;
    fs::write(root.join("demo/config.toml"), AppConfig::default().to_toml())?;
    println!("fixtures written to {}", root.display());
    Ok(())
}
