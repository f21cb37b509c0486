#![allow(dead_code)]

pub mod fixtures;

use std::path::Path;
use std::time::Duration;

use egopilot_core::config::{assemble, AppConfig, Assembled};
use egopilot_core::event_log::EventLog;
use egopilot_core::providers::StubTable;
use egopilot_core::transport::{serve, ServerHandle};

pub const WAIT: Duration = Duration::from_secs(10);

pub const LONG_REPLY: &str = "Here is a long story about the kitchen, the table, the chessboard and the mug on the left, \
told slowly so that playback takes a while and there is time to interrupt it halfway through.";

pub fn demo_lm() -> StubTable {
    StubTable::new("OK.")
        .with("interpret: which mug", r#"["the left mug", "the right mug"]"#)
        .with("score interpretation: the left mug", "0.5")
        .with("score interpretation: the right mug", "0.5")
        .with("plan for: calories of this apple", r#"[{"name": "nutrition.lookup", "arguments": {"food": "apple"}}]"#)
        .with("plan for: add dentist", r#"[{"name": "calendar.add", "arguments": {"title": "Dentist", "time": "09:30"}}, {"name": "memo.add", "arguments": {"text": "dentist booked"}}]"#)
        .with("plan for: the left mug", "[]")
        .with("plan for: tell a story", "[]")
        .with("plan for:", "[]")
        .with("Interpreted as: the left mug", "The left mug is the blue one.")
        .with("Some steps failed", "I could not add the dentist appointment.")
        .with("respond to: calories of this apple", "An apple has about 52 kcal per 100 g.")
        .with("respond to: add dentist", "Dentist added at 09:30.")
        .with("respond to: tell a story", LONG_REPLY)
        .with("respond to:", "OK.")
}

pub fn config(trace_dir: Option<&Path>) -> AppConfig {
    let mut cfg = AppConfig::default();
    cfg.server.trace_dir = trace_dir.map(Path::to_path_buf);
    cfg.orchestrator.confirm_deadline_ms = 5_000;
    cfg.orchestrator.clarify_deadline_ms = 5_000;
    cfg.board.engine.depth = 1;
    cfg
}

pub fn runtime(cfg: &AppConfig, asr: StubTable) -> Assembled {
    assemble(cfg, demo_lm(), asr, EventLog::default()).expect("demo runtime assembles")
}

pub fn start(cfg: &AppConfig, asr: StubTable, tweak: impl FnOnce(&mut egopilot_core::transport::SessionConfig)) -> ServerHandle {
    let a = runtime(cfg, asr);
    let mut session = a.session;
    tweak(&mut session);
    serve("127.0.0.1:0", a.runtime, session).expect("bind loopback")
}
