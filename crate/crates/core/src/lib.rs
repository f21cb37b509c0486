//! Runtime for a wearable first-person assistant: a sorted multimodal event
//! log with budgeted context construction, a multiple-choice answer engine,
//! a guarded tool-calling orchestrator with a clarification gate, a
//! perception-smoothed chess tool, an energy VAD with barge-in, and a
//! length-prefixed full-duplex transport. Every model call goes through the
//! traits in [`providers`], which ship with deterministic scripted stubs.

pub mod answer;
pub mod audio;
pub mod board;
pub mod clarifier;
pub mod config;
pub mod context;
pub mod event_log;
pub mod harness;
pub mod orchestrator;
pub mod providers;
pub mod tools;
pub mod transport;
