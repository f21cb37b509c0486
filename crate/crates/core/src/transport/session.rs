//! Per-connection pipeline: VAD, ASR, orchestration and TTS over one
//! framed duplex stream.
//!
//! Threads per session: the reader (caller of [`handle_session`], owns the
//! VAD), a writer draining an ordered outbound queue, and a turn worker
//! that handles queries strictly one at a time.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::Serialize;
use serde_json::{json, Value};

use super::control::ControlMessage;
use super::frame::{read_frame, write_frame, Frame, FrameError, FrameType};
use crate::audio::{Vad, VadConfig, VadEvent};
use crate::event_log::{Event, EventLog};
use crate::orchestrator::{
    ConfirmationReply, ConfirmationRequest, ExecutionObserver, Orchestrator, UserPrompter,
};
use crate::providers::{SpeechRecognizer, SpeechSynthesizer};
use crate::tools::{ToolCall, ToolResult};

/// The provider stages shared by every session.
#[derive(Clone)]
pub struct Runtime {
    pub orchestrator: Arc<Orchestrator>,
    pub asr: Arc<dyn SpeechRecognizer>,
    pub tts: Arc<dyn SpeechSynthesizer>,
}

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub vad: VadConfig,
    /// Bytes of synthesized audio per outbound audio frame.
    pub tts_chunk_bytes: usize,
    /// Pause between outbound audio frames.
    pub tts_interval_ms: u64,
    /// One `<session_id>.jsonl` per session when set.
    pub trace_dir: Option<PathBuf>,
    /// Copied into every new session.
    pub initial_log: EventLog,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            vad: VadConfig::default(),
            tts_chunk_bytes: 3200,
            tts_interval_ms: 20,
            trace_dir: None,
            initial_log: EventLog::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub turns: usize,
    pub frames_in: usize,
    /// Set when the session ended on a protocol error.
    pub error: Option<String>,
}

enum Outbound {
    Control(ControlMessage),
    Audio { turn_id: String, frame: Frame },
}

enum Pending {
    Confirm(Sender<bool>),
    Clarify(Sender<String>),
}

#[derive(Default)]
struct PendingTable {
    closed: bool,
    entries: HashMap<String, Pending>,
}

#[derive(Default)]
struct Playback {
    active: bool,
    turn_id: Option<String>,
}

struct TraceFile {
    seq: u64,
    out: BufWriter<File>,
}

struct Trace {
    session_id: String,
    file: Option<Mutex<TraceFile>>,
}

impl Trace {
    fn record(&self, mut record: Value) {
        let Some(file) = &self.file else { return };
        let mut t = file.lock().expect("trace poisoned");
        t.seq += 1;
        record["session_id"] = json!(self.session_id);
        record["seq"] = json!(t.seq);
        let line = serde_json::to_string(&record).expect("trace records serialize");
        if writeln!(t.out, "{line}").and_then(|_| t.out.flush()).is_err() {
            tracing::warn!(session = %self.session_id, "trace write failed");
        }
    }
}

struct Shared {
    session_id: String,
    out: Sender<Outbound>,
    playback: Mutex<Playback>,
    pending: Mutex<PendingTable>,
    next_id: AtomicU64,
    closed: AtomicBool,
    trace: Arc<Trace>,
    log: Mutex<EventLog>,
    started: Instant,
}

impl Shared {
    fn fresh_id(&self) -> String {
        format!("{}:{}", self.session_id, self.next_id.fetch_add(1, Ordering::Relaxed) + 1)
    }

    fn send(&self, msg: ControlMessage) {
        let _ = self.out.send(Outbound::Control(msg));
    }

    fn record(&self, record: Value) {
        self.trace.record(record);
    }

    /// Stops streaming and emits `halt`, both under the playback lock so no
    /// audio frame can be queued behind the halt.
    fn halt_locked(&self, pb: &mut Playback) {
        if pb.active {
            pb.active = false;
            self.send(ControlMessage::Halt { id: pb.turn_id.clone() });
        }
    }

    /// No further prompt can be answered; waiting ones time out now.
    fn close_prompts(&self) {
        let mut p = self.pending.lock().expect("pending poisoned");
        p.closed = true;
        p.entries.clear();
    }

    fn now(&self, log: &EventLog) -> u64 {
        let elapsed = self.started.elapsed().as_millis() as u64;
        elapsed.max(log.last_timestamp().unwrap_or(0))
    }
}

struct SessionPrompter {
    shared: Arc<Shared>,
}

impl SessionPrompter {
    fn register(&self, id: &str, entry: Pending) -> bool {
        let mut p = self.shared.pending.lock().expect("pending poisoned");
        if p.closed {
            return false;
        }
        p.entries.insert(id.to_string(), entry);
        true
    }

    fn unregister(&self, id: &str) {
        self.shared.pending.lock().expect("pending poisoned").entries.remove(id);
    }
}

impl UserPrompter for SessionPrompter {
    fn confirm(&self, request: &ConfirmationRequest) -> ConfirmationReply {
        let id = self.shared.fresh_id();
        let (tx, rx) = mpsc::channel();
        if !self.register(&id, Pending::Confirm(tx)) {
            return ConfirmationReply::TimedOut;
        }
        self.shared.send(ControlMessage::ConfirmRequest {
            id: id.clone(),
            call: request.call.clone(),
            prompt: request.prompt.clone(),
            deadline_ms: request.deadline_ms,
        });
        let got = rx.recv_timeout(Duration::from_millis(request.deadline_ms));
        self.unregister(&id);
        match got {
            Ok(true) => ConfirmationReply::Approved,
            Ok(false) => ConfirmationReply::Denied,
            Err(_) => ConfirmationReply::TimedOut,
        }
    }

    fn clarify(&self, question: &str, deadline_ms: u64) -> Option<String> {
        let id = self.shared.fresh_id();
        let (tx, rx) = mpsc::channel();
        if !self.register(&id, Pending::Clarify(tx)) {
            return None;
        }
        self.shared.send(ControlMessage::ClarifyQuestion {
            id: id.clone(),
            question: question.to_string(),
            deadline_ms,
        });
        let got = rx.recv_timeout(Duration::from_millis(deadline_ms));
        self.unregister(&id);
        got.ok()
    }
}

struct WireObserver<'a> {
    shared: &'a Shared,
    turn_id: &'a str,
}

impl ExecutionObserver for WireObserver<'_> {
    fn on_tool_call(&self, index: usize, call: &ToolCall) {
        self.shared.send(ControlMessage::ToolCall {
            id: self.turn_id.to_string(),
            index,
            call: call.clone(),
        });
    }

    fn on_tool_result(&self, index: usize, call: &ToolCall, result: &ToolResult) {
        self.shared.send(ControlMessage::ToolResult {
            id: self.turn_id.to_string(),
            index,
            name: call.name.clone(),
            result: result.clone(),
        });
    }
}

struct TurnRequest {
    id: String,
    text: String,
}

fn writer_loop(mut w: impl Write, rx: Receiver<Outbound>, trace: Arc<Trace>) {
    let mut broken = false;
    for item in rx {
        let frame = match &item {
            Outbound::Control(msg) => {
                trace.record(json!({"dir": "out", "message": msg}));
                msg.to_frame()
            }
            Outbound::Audio { turn_id, frame } => {
                trace.record(json!({"dir": "out", "turn_id": turn_id, "audio_bytes": frame.payload.len()}));
                frame.clone()
            }
        };
        if broken {
            continue;
        }
        if write_frame(&mut w, &frame).and_then(|_| w.flush().map_err(FrameError::from)).is_err() {
            tracing::debug!(session = %trace.session_id, "peer stopped reading");
            broken = true;
        }
    }
}

fn stream_speech(shared: &Shared, runtime: &Runtime, cfg: &SessionConfig, turn_id: &str, text: &str) {
    let bytes = match runtime.tts.synthesize(text) {
        Ok(b) => b,
        Err(e) => {
            shared.send(ControlMessage::error(Some(turn_id), format!("speech synthesis failed: {e}")));
            return;
        }
    };
    if bytes.is_empty() {
        return;
    }
    {
        let mut pb = shared.playback.lock().expect("playback poisoned");
        pb.active = true;
        pb.turn_id = Some(turn_id.to_string());
    }
    let mut chunks = bytes.chunks(cfg.tts_chunk_bytes.max(1)).peekable();
    while let Some(chunk) = chunks.next() {
        {
            let pb = shared.playback.lock().expect("playback poisoned");
            if !pb.active || shared.closed.load(Ordering::SeqCst) {
                return;
            }
            let _ = shared.out.send(Outbound::Audio {
                turn_id: turn_id.to_string(),
                frame: Frame::new(FrameType::Audio, chunk),
            });
        }
        if chunks.peek().is_some() && cfg.tts_interval_ms > 0 {
            thread::sleep(Duration::from_millis(cfg.tts_interval_ms));
        }
    }
    let mut pb = shared.playback.lock().expect("playback poisoned");
    if pb.turn_id.as_deref() == Some(turn_id) {
        pb.active = false;
    }
}

fn turn_loop(rx: Receiver<TurnRequest>, shared: Arc<Shared>, runtime: Runtime, cfg: Arc<SessionConfig>) -> usize {
    let mut turns = 0;
    for req in rx {
        if shared.closed.load(Ordering::SeqCst) {
            continue;
        }
        let log = shared.log.lock().expect("log poisoned").clone();
        let now = shared.now(&log);
        let prompter = SessionPrompter { shared: shared.clone() };
        let observer = WireObserver {
            shared: &shared,
            turn_id: &req.id,
        };
        let turn = runtime
            .orchestrator
            .handle_turn(&req.text, &log, now, &prompter, &observer);
        shared.send(ControlMessage::Response {
            id: req.id.clone(),
            text: turn.response.clone(),
            partial: turn.partial,
            error: turn.error.clone(),
        });
        shared.record(json!({"turn_id": req.id, "turn": turn}));
        turns += 1;
        stream_speech(&shared, &runtime, &cfg, &req.id, &turn.response);
    }
    turns
}

/// What the reader does after a frame.
enum Flow {
    Continue,
    Close(String),
}

struct Reader {
    shared: Arc<Shared>,
    runtime: Runtime,
    vad: Vad,
    pcm: Vec<i16>,
    turns: Sender<TurnRequest>,
    handshaken: bool,
}

impl Reader {
    fn start_session(&mut self) {
        self.handshaken = true;
        let o = &self.runtime.orchestrator;
        self.shared.send(ControlMessage::Hello {
            session_id: Some(self.shared.session_id.clone()),
            client: None,
        });
        self.shared.send(ControlMessage::ToolsList {
            session_id: self.shared.session_id.clone(),
            tools: o.registry.list_tools(&o.allowlist),
        });
    }

    fn submit(&self, id: String, text: String) {
        if text.trim().is_empty() {
            self.shared.send(ControlMessage::error(Some(&id), "empty query"));
            return;
        }
        let _ = self.turns.send(TurnRequest { id, text });
    }

    fn on_control(&mut self, msg: ControlMessage) -> Flow {
        self.shared.record(json!({"dir": "in", "message": msg}));
        if !self.handshaken {
            match msg {
                ControlMessage::Hello { .. } | ControlMessage::Query { .. } | ControlMessage::Transcript { .. } => {
                    self.start_session()
                }
                other => return Flow::Close(format!("expected hello, query or transcript first, got {}", other.kind())),
            }
        }
        match msg {
            ControlMessage::Hello { .. } => {}
            ControlMessage::Query { id, text } | ControlMessage::Transcript { id, text } => self.submit(id, text),
            ControlMessage::ConfirmReply { id, approve } => {
                let entry = self.shared.pending.lock().expect("pending poisoned").entries.remove(&id);
                match entry {
                    Some(Pending::Confirm(tx)) => {
                        let _ = tx.send(approve);
                    }
                    Some(other) => self.reinsert_mismatch(id, other, "confirm_reply"),
                    None => self.stale(&id),
                }
            }
            ControlMessage::ClarifyReply { id, text } => {
                let entry = self.shared.pending.lock().expect("pending poisoned").entries.remove(&id);
                match entry {
                    Some(Pending::Clarify(tx)) => {
                        let _ = tx.send(text);
                    }
                    Some(other) => self.reinsert_mismatch(id, other, "clarify_reply"),
                    None => self.stale(&id),
                }
            }
            ControlMessage::Halt { .. } => {
                let mut pb = self.shared.playback.lock().expect("playback poisoned");
                self.shared.halt_locked(&mut pb);
            }
            other => {
                self.shared
                    .send(ControlMessage::error(other.id(), format!("`{}` is not a client message", other.kind())));
            }
        }
        Flow::Continue
    }

    fn reinsert_mismatch(&self, id: String, entry: Pending, kind: &str) {
        self.shared.send(ControlMessage::error(Some(&id), format!("{kind} does not match the pending prompt")));
        self.shared
            .pending
            .lock()
            .expect("pending poisoned")
            .entries
            .insert(id, entry);
    }

    fn stale(&self, id: &str) {
        self.shared.send(ControlMessage::error(Some(id), "no pending prompt with this id"));
    }

    fn on_audio(&mut self, frame: &Frame) -> Flow {
        let Some(samples) = frame.pcm16() else {
            return Flow::Close("audio payload is not whole PCM16 samples".into());
        };
        self.pcm.extend_from_slice(&samples);
        let n = self.vad.config().chunk_samples;
        let rate = self.vad.config().sample_rate;
        let mut offset = 0;
        while self.pcm.len() - offset >= n {
            let chunk = &self.pcm[offset..offset + n];
            offset += n;
            let mut segments = Vec::new();
            {
                let mut pb = self.shared.playback.lock().expect("playback poisoned");
                let events = match self.vad.process(chunk, pb.active) {
                    Ok(ev) => ev,
                    Err(e) => return Flow::Close(e.to_string()),
                };
                for ev in events {
                    match ev {
                        VadEvent::HaltPlayback => self.shared.halt_locked(&mut pb),
                        VadEvent::Dispatch(seg) => segments.push(seg),
                    }
                }
            }
            for seg in segments {
                let id = self.shared.fresh_id();
                match self.runtime.asr.transcribe(&seg, rate) {
                    Ok(text) => {
                        self.shared.send(ControlMessage::Transcript {
                            id: id.clone(),
                            text: text.clone(),
                        });
                        if !text.trim().is_empty() {
                            let _ = self.turns.send(TurnRequest { id, text });
                        }
                    }
                    Err(e) => self.shared.send(ControlMessage::error(Some(&id), format!("speech recognition failed: {e}"))),
                }
            }
        }
        self.pcm.drain(..offset);
        Flow::Continue
    }

    fn on_event(&mut self, frame: &Frame) -> Flow {
        let parsed: Result<Event, String> = std::str::from_utf8(&frame.payload)
            .map_err(|e| e.to_string())
            .and_then(|t| serde_json::from_str::<Event>(t).map_err(|e| e.to_string()))
            .and_then(|e| Event::new(e.timestamp, e.modality, e.source_id, &e.content).map_err(|e| e.to_string()));
        match parsed {
            Ok(event) => {
                self.shared.record(json!({"dir": "in", "event": event}));
                self.shared.log.lock().expect("log poisoned").append(event);
                Flow::Continue
            }
            Err(e) => Flow::Close(format!("bad event frame: {e}")),
        }
    }

    fn on_frame(&mut self, frame: Frame) -> Flow {
        if frame.frame_type == FrameType::Control {
            return match ControlMessage::parse(&frame.payload) {
                Ok(msg) => self.on_control(msg),
                Err(e) => Flow::Close(e),
            };
        }
        if !self.handshaken {
            return Flow::Close(format!("expected a control handshake, got a {:?} frame", frame.frame_type));
        }
        match frame.frame_type {
            FrameType::Audio => self.on_audio(&frame),
            FrameType::Event => self.on_event(&frame),
            FrameType::Video | FrameType::Control => Flow::Continue,
        }
    }
}

/// Runs one session to completion: until the peer closes its side, a
/// protocol error, or a read failure. Queued turns are finished first only
/// on a clean close.
pub fn handle_session<R, W>(
    reader: R,
    writer: W,
    session_id: &str,
    runtime: Runtime,
    cfg: Arc<SessionConfig>,
) -> SessionSummary
where
    R: Read,
    W: Write + Send + 'static,
{
    let file = cfg.trace_dir.as_ref().and_then(|dir| {
        let path = dir.join(format!("{session_id}.jsonl"));
        match File::create(&path) {
            Ok(f) => Some(Mutex::new(TraceFile {
                seq: 0,
                out: BufWriter::new(f),
            })),
            Err(e) => {
                tracing::warn!(path = %path.display(), error = %e, "cannot open trace file");
                None
            }
        }
    });
    let trace = Arc::new(Trace {
        session_id: session_id.to_string(),
        file,
    });
    let (out_tx, out_rx) = mpsc::channel();
    let shared = Arc::new(Shared {
        session_id: session_id.to_string(),
        out: out_tx,
        playback: Mutex::new(Playback::default()),
        pending: Mutex::new(PendingTable::default()),
        next_id: AtomicU64::new(0),
        closed: AtomicBool::new(false),
        trace: trace.clone(),
        log: Mutex::new(cfg.initial_log.clone()),
        started: Instant::now(),
    });
    let writer_thread = thread::spawn(move || writer_loop(writer, out_rx, trace));
    let (turn_tx, turn_rx) = mpsc::channel();
    let worker = {
        let (shared, runtime, cfg) = (shared.clone(), runtime.clone(), cfg.clone());
        thread::spawn(move || turn_loop(turn_rx, shared, runtime, cfg))
    };

    let vad = Vad::new(cfg.vad.clone()).unwrap_or_else(|e| {
        tracing::warn!(error = %e, "invalid VAD config, using defaults");
        Vad::new(VadConfig::default()).expect("default VAD config is valid")
    });
    let mut r = Reader {
        shared: shared.clone(),
        runtime,
        vad,
        pcm: Vec::new(),
        turns: turn_tx,
        handshaken: false,
    };
    let mut summary = SessionSummary {
        session_id: session_id.to_string(),
        ..SessionSummary::default()
    };
    let mut input = BufReader::new(reader);
    loop {
        match read_frame(&mut input) {
            Ok(None) => break,
            Ok(Some(frame)) => {
                summary.frames_in += 1;
                if let Flow::Close(reason) = r.on_frame(frame) {
                    summary.error = Some(reason);
                    break;
                }
            }
            Err(FrameError::Io(e)) => {
                tracing::debug!(session = session_id, error = %e, "read ended");
                break;
            }
            Err(e) => {
                summary.error = Some(e.to_string());
                break;
            }
        }
    }
    if let Some(reason) = &summary.error {
        tracing::info!(session = session_id, %reason, "closing session on protocol error");
        shared.send(ControlMessage::error(None, reason.clone()));
        shared.closed.store(true, Ordering::SeqCst);
    }
    shared.close_prompts();
    drop(r);
    summary.turns = worker.join().unwrap_or(0);
    drop(shared);
    let _ = writer_thread.join();
    summary
}
