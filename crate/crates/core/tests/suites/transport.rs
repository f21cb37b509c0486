use std::net::SocketAddr;
use std::time::{Duration, Instant};

use egopilot_core::audio::synth;
use egopilot_core::providers::StubTable;
use egopilot_core::transport::{Client, ControlMessage, Frame, FrameType, Received};
use serde_json::Value;

use super::Outcome;
use crate::common::{config, start, LONG_REPLY, WAIT};

fn kinds(items: &[Received]) -> Vec<&'static str> {
    items
        .iter()
        .map(|r| match r {
            Received::Control(m) => m.kind(),
            Received::Frame(f) if f.frame_type == FrameType::Audio => "audio",
            Received::Frame(_) => "frame",
        })
        .collect()
}

fn response_text(items: &[Received]) -> Option<String> {
    items.iter().find_map(|r| match r.control() {
        Some(ControlMessage::Response { text, .. }) => Some(text.clone()),
        _ => None,
    })
}

/// Starts a long spoken reply, barges in after the first audio frame and
/// checks that no reply audio follows the `halt`. Returns the number of
/// audio bytes that went out before it.
pub fn barge_in_session(addr: SocketAddr, turn: &str) -> Result<usize, String> {
    let e = |x: std::io::Error| x.to_string();
    let mut c = Client::connect(addr).map_err(e)?;
    c.hello(WAIT).map_err(e)?;
    c.query(turn, "tell a story").map_err(e)?;
    let before = c.recv_until(WAIT, |r| r.is_audio()).map_err(e)?;
    if response_text(&before).as_deref() != Some(LONG_REPLY) {
        return Err(format!("{turn}: unexpected reply {:?}", kinds(&before)));
    }
    c.send_frame(&Frame::audio(&synth::square(20, 16_000, 8000))).map_err(e)?;
    let after = c.recv_until(Duration::from_millis(600), |_| false).map_err(e)?;
    let halt = after
        .iter()
        .position(|r| matches!(r.control(), Some(ControlMessage::Halt { id: Some(i) }) if i == turn))
        .ok_or_else(|| format!("{turn}: no halt in {:?}", kinds(&after)))?;
    if after[halt + 1..].iter().any(Received::is_audio) {
        return Err(format!("{turn}: audio after halt: {:?}", kinds(&after)));
    }
    let streamed: usize = before
        .iter()
        .chain(&after[..halt])
        .filter_map(|r| match r {
            Received::Frame(f) if f.frame_type == FrameType::Audio => Some(f.payload.len()),
            _ => None,
        })
        .sum();
    if streamed >= LONG_REPLY.len() {
        return Err(format!("{turn}: the whole reply played before the halt"));
    }
    Ok(streamed)
}

/// `sessions` concurrent barge-ins on one server.
pub fn barge_in(sessions: usize) -> Outcome {
    let server = start(&config(None), StubTable::new(""), |s| {
        s.tts_chunk_bytes = 4;
        s.tts_interval_ms = 10;
    });
    let addr = server.local_addr();
    let workers: Vec<_> = (0..sessions)
        .map(|i| std::thread::spawn(move || barge_in_session(addr, &format!("q{i}"))))
        .collect();
    let results: Vec<Result<usize, String>> = workers
        .into_iter()
        .map(|w| w.join().unwrap_or_else(|_| Err("session thread panicked".into())))
        .collect();
    server.shutdown();
    let mut streamed = Vec::new();
    for r in results {
        streamed.push(r?);
    }
    Ok(format!(
        "{sessions} sessions: halt before any further reply audio (at most {} of {} bytes played)",
        streamed.iter().max().unwrap_or(&0),
        LONG_REPLY.len()
    ))
}

fn trace_lines(path: &std::path::Path) -> Result<Vec<Value>, String> {
    std::fs::read_to_string(path)
        .map_err(|e| format!("{}: {e}", path.display()))?
        .lines()
        .map(|l| serde_json::from_str(l).map_err(|e| e.to_string()))
        .collect()
}

fn isolated_client(addr: SocketAddr, k: usize, turns: usize) -> Result<String, String> {
    let e = |x: std::io::Error| x.to_string();
    let mut c = Client::connect(addr).map_err(e)?;
    let (session, _) = c.hello(WAIT).map_err(e)?;
    let own = |id: &str| id.starts_with(&format!("c{k}-")) || id.starts_with(&format!("{session}:"));
    for i in 0..turns {
        let id = format!("c{k}-{i}");
        let q = if i % 2 == 0 { "add dentist" } else { "calories of this apple" };
        c.query(&id, q).map_err(e)?;
        loop {
            let r = c.recv(WAIT).map_err(e)?.ok_or("server stalled")?;
            let Some(m) = r.control() else { continue };
            if let Some(mid) = m.id() {
                if !own(mid) {
                    return Err(format!("{session} received {mid}"));
                }
            }
            match m {
                ControlMessage::ConfirmRequest { id: cid, .. } => {
                    c.send(&ControlMessage::ConfirmReply {
                        id: cid.clone(),
                        approve: true,
                    })
                    .map_err(e)?;
                }
                ControlMessage::Response { id: rid, .. } if *rid == id => break,
                ControlMessage::Response { id: rid, .. } => return Err(format!("response {rid} while waiting for {id}")),
                _ => {}
            }
        }
    }
    Ok(session)
}

/// Two concurrent sessions see only their own ids, and their traces hold
/// only their own records.
pub fn isolation() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let server = start(&config(Some(dir.path())), StubTable::new(""), |_| {});
    let addr = server.local_addr();
    let turns = 6;
    let workers: Vec<_> = (0..2)
        .map(|k| std::thread::spawn(move || isolated_client(addr, k, turns)))
        .collect();
    let mut sessions = Vec::new();
    for w in workers {
        sessions.push(w.join().map_err(|_| "client panicked".to_string())??);
    }
    sessions.sort();
    let summaries = server.shutdown();
    if sessions != ["s1", "s2"] || summaries.iter().any(|s| s.turns != turns || s.error.is_some()) {
        return Err(format!("sessions {sessions:?}, summaries {summaries:?}"));
    }
    for s in &sessions {
        let other = if s == "s1" { "s2" } else { "s1" };
        let lines = trace_lines(&dir.path().join(format!("{s}.jsonl")))?;
        if lines.iter().any(|l| l["session_id"] != s.as_str() || l.to_string().contains(&format!("\"{other}:"))) {
            return Err(format!("trace of {s} mentions {other}"));
        }
        let recorded = lines.iter().filter(|l| l.get("turn").is_some()).count();
        if recorded != turns {
            return Err(format!("trace of {s} has {recorded} turns"));
        }
    }
    Ok(format!("2 concurrent sessions x {turns} turns, no cross-session ids or trace records"))
}

/// Median wall time from sending a text query to receiving its response.
pub fn text_turn_median(turns: usize) -> Result<Duration, String> {
    let server = start(&config(None), StubTable::new(""), |s| s.tts_interval_ms = 0);
    let e = |x: std::io::Error| x.to_string();
    let mut c = Client::connect(server.local_addr()).map_err(e)?;
    c.hello(WAIT).map_err(e)?;
    let mut times = Vec::with_capacity(turns);
    for i in 0..turns {
        let id = format!("t{i}");
        let t = Instant::now();
        c.query(&id, "calories of this apple").map_err(e)?;
        let got = c.until_response(&id, WAIT).map_err(e)?;
        times.push(t.elapsed());
        if response_text(&got).as_deref() != Some("An apple has about 52 kcal per 100 g.") {
            return Err(format!("turn {i}: {:?}", kinds(&got)));
        }
        // drain the spoken reply so the next turn starts idle
        c.recv_until(WAIT, |r| r.is_audio()).map_err(e)?;
    }
    drop(c);
    server.shutdown();
    times.sort();
    Ok(times[times.len() / 2])
}

pub fn latency(turns: usize) -> Outcome {
    let median = text_turn_median(turns)?;
    let detail = format!("median text turn {:.2} ms over {turns} turns", median.as_secs_f64() * 1000.0);
    if median < Duration::from_millis(50) {
        Ok(detail)
    } else {
        Err(detail)
    }
}
