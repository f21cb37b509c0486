//! Blocking client for tests and scripted sessions.

use std::io::{self, Read, Write};
use std::net::{Shutdown, TcpStream, ToSocketAddrs};
use std::time::{Duration, Instant};

use super::control::ControlMessage;
use super::frame::{decode_frame, encode_frame, Decoded, Frame, FrameType};
use crate::tools::ToolSchema;

pub struct Client {
    stream: TcpStream,
    buf: Vec<u8>,
    eof: bool,
}

/// One inbound item, in arrival order.
#[derive(Debug, Clone, PartialEq)]
pub enum Received {
    Control(ControlMessage),
    Frame(Frame),
}

impl Received {
    pub fn control(&self) -> Option<&ControlMessage> {
        match self {
            Received::Control(m) => Some(m),
            Received::Frame(_) => None,
        }
    }

    pub fn is_audio(&self) -> bool {
        matches!(self, Received::Frame(f) if f.frame_type == FrameType::Audio)
    }
}

impl Client {
    pub fn connect(addr: impl ToSocketAddrs) -> io::Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Client {
            stream,
            buf: Vec::new(),
            eof: false,
        })
    }

    pub fn send_frame(&mut self, frame: &Frame) -> io::Result<()> {
        let bytes = encode_frame(frame).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
        self.stream.write_all(&bytes)
    }

    pub fn send_raw(&mut self, bytes: &[u8]) -> io::Result<()> {
        self.stream.write_all(bytes)
    }

    pub fn send(&mut self, msg: &ControlMessage) -> io::Result<()> {
        self.send_frame(&msg.to_frame())
    }

    pub fn query(&mut self, id: &str, text: &str) -> io::Result<()> {
        self.send(&ControlMessage::Query {
            id: id.into(),
            text: text.into(),
        })
    }

    /// Sends `hello` and returns the assigned session id and tool list.
    pub fn hello(&mut self, timeout: Duration) -> io::Result<(String, Vec<ToolSchema>)> {
        self.send(&ControlMessage::Hello {
            session_id: None,
            client: Some("egopilot-client".into()),
        })?;
        let mut session = None;
        loop {
            match self.recv(timeout)? {
                Some(Received::Control(ControlMessage::Hello { session_id, .. })) => session = session_id,
                Some(Received::Control(ControlMessage::ToolsList { session_id, tools })) => {
                    return Ok((session.unwrap_or(session_id), tools))
                }
                Some(_) => {}
                None => return Err(io::Error::new(io::ErrorKind::TimedOut, "no tools_list")),
            }
        }
    }

    /// Next inbound frame; `None` on timeout or a closed connection.
    /// A timeout never loses a partially received frame.
    pub fn recv(&mut self, timeout: Duration) -> io::Result<Option<Received>> {
        let deadline = Instant::now() + timeout;
        loop {
            match decode_frame(&self.buf).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))? {
                Decoded::Complete { frame, rest } => {
                    let used = self.buf.len() - rest.len();
                    self.buf.drain(..used);
                    return if frame.frame_type == FrameType::Control {
                        ControlMessage::from_frame(&frame)
                            .map(|m| Some(Received::Control(m)))
                            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
                    } else {
                        Ok(Some(Received::Frame(frame)))
                    };
                }
                Decoded::NeedMore(_) => {}
            }
            let left = deadline.saturating_duration_since(Instant::now());
            if self.eof || left.is_zero() {
                return Ok(None);
            }
            self.stream.set_read_timeout(Some(left))?;
            let mut chunk = [0u8; 8192];
            match self.stream.read(&mut chunk) {
                Ok(0) => self.eof = true,
                Ok(n) => self.buf.extend_from_slice(&chunk[..n]),
                Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => return Ok(None),
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) if e.kind() == io::ErrorKind::ConnectionReset => self.eof = true,
                Err(e) => return Err(e),
            }
        }
    }

    /// True once the server closed the connection and every buffered frame
    /// was consumed.
    pub fn is_closed(&self) -> bool {
        self.eof && self.buf.is_empty()
    }

    /// Collects frames until `stop` matches one (included) or `timeout`
    /// runs out overall.
    pub fn recv_until(&mut self, timeout: Duration, mut stop: impl FnMut(&Received) -> bool) -> io::Result<Vec<Received>> {
        let deadline = Instant::now() + timeout;
        let mut got = Vec::new();
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                return Ok(got);
            }
            match self.recv(left)? {
                Some(r) => {
                    let done = stop(&r);
                    got.push(r);
                    if done {
                        return Ok(got);
                    }
                }
                None => return Ok(got),
            }
        }
    }

    /// Waits for the `response` to `id`, returning everything seen on the way.
    pub fn until_response(&mut self, id: &str, timeout: Duration) -> io::Result<Vec<Received>> {
        self.recv_until(timeout, |r| {
            matches!(r, Received::Control(ControlMessage::Response { id: rid, .. }) if rid == id)
        })
    }

    pub fn close_write(&self) -> io::Result<()> {
        self.stream.shutdown(Shutdown::Write)
    }
}
