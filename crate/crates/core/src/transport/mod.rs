//! Full-duplex framed transport: wire format, control vocabulary, the
//! per-session pipeline and a TCP server.

pub mod client;
pub mod control;
pub mod frame;
pub mod server;
pub mod session;

pub use client::{Client, Received};
pub use control::ControlMessage;
pub use frame::{decode_frame, encode_frame, read_frame, write_frame, Decoded, Frame, FrameError, FrameType, HEADER_LEN, MAX_PAYLOAD};
pub use server::{serve, ServeError, ServerHandle};
pub use session::{handle_session, Runtime, SessionConfig, SessionSummary};
