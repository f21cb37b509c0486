//! Length-prefixed binary framing.
//!
//! Wire layout: 4-byte big-endian payload length, 1 byte frame type, then
//! the payload.

use std::io::{self, Read, Write};

use thiserror::Error;

pub const HEADER_LEN: usize = 5;
pub const MAX_PAYLOAD: usize = 16 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum FrameType {
    Control = 0x01,
    Audio = 0x02,
    Video = 0x03,
    Event = 0x04,
}

impl FrameType {
    pub const ALL: [FrameType; 4] = [FrameType::Control, FrameType::Audio, FrameType::Video, FrameType::Event];

    pub fn from_byte(b: u8) -> Result<Self, FrameError> {
        match b {
            0x01 => Ok(FrameType::Control),
            0x02 => Ok(FrameType::Audio),
            0x03 => Ok(FrameType::Video),
            0x04 => Ok(FrameType::Event),
            other => Err(FrameError::UnknownFrameType(other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub frame_type: FrameType,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(frame_type: FrameType, payload: impl Into<Vec<u8>>) -> Self {
        Frame {
            frame_type,
            payload: payload.into(),
        }
    }

    pub fn control(json: &str) -> Self {
        Frame::new(FrameType::Control, json.as_bytes())
    }

    /// PCM16 little-endian.
    pub fn audio(samples: &[i16]) -> Self {
        Frame::new(FrameType::Audio, samples.iter().flat_map(|s| s.to_le_bytes()).collect::<Vec<u8>>())
    }

    /// Decodes an audio payload as PCM16 little-endian.
    pub fn pcm16(&self) -> Option<Vec<i16>> {
        if self.payload.len() % 2 != 0 {
            return None;
        }
        Some(
            self.payload
                .chunks_exact(2)
                .map(|b| i16::from_le_bytes([b[0], b[1]]))
                .collect(),
        )
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }
}

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("unknown frame type 0x{0:02x}")]
    UnknownFrameType(u8),
    #[error("payload of {0} bytes exceeds the {MAX_PAYLOAD} byte cap")]
    OversizeFrame(usize),
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

impl PartialEq for FrameError {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (FrameError::UnknownFrameType(a), FrameError::UnknownFrameType(b)) => a == b,
            (FrameError::OversizeFrame(a), FrameError::OversizeFrame(b)) => a == b,
            (FrameError::Io(a), FrameError::Io(b)) => a.kind() == b.kind(),
            _ => false,
        }
    }
}

#[derive(Debug, PartialEq, Eq)]
pub enum Decoded<'a> {
    Complete { frame: Frame, rest: &'a [u8] },
    /// At least this many more bytes are needed; nothing was consumed.
    NeedMore(usize),
}

pub fn encode_frame(frame: &Frame) -> Result<Vec<u8>, FrameError> {
    let mut out = Vec::with_capacity(frame.encoded_len());
    encode_into(frame, &mut out)?;
    Ok(out)
}

pub fn encode_into(frame: &Frame, out: &mut Vec<u8>) -> Result<(), FrameError> {
    let len = frame.payload.len();
    if len > MAX_PAYLOAD {
        return Err(FrameError::OversizeFrame(len));
    }
    out.extend_from_slice(&(len as u32).to_be_bytes());
    out.push(frame.frame_type as u8);
    out.extend_from_slice(&frame.payload);
    Ok(())
}

fn parse_header(h: &[u8]) -> Result<(usize, FrameType), FrameError> {
    let len = u32::from_be_bytes([h[0], h[1], h[2], h[3]]) as usize;
    if len > MAX_PAYLOAD {
        return Err(FrameError::OversizeFrame(len));
    }
    Ok((len, FrameType::from_byte(h[4])?))
}

/// Decodes one frame from the front of `buf`. Header errors are reported
/// as soon as the header is complete, without waiting for the payload.
pub fn decode_frame(buf: &[u8]) -> Result<Decoded<'_>, FrameError> {
    if buf.len() < HEADER_LEN {
        return Ok(Decoded::NeedMore(HEADER_LEN - buf.len()));
    }
    let (len, frame_type) = parse_header(&buf[..HEADER_LEN])?;
    let end = HEADER_LEN + len;
    if buf.len() < end {
        return Ok(Decoded::NeedMore(end - buf.len()));
    }
    Ok(Decoded::Complete {
        frame: Frame::new(frame_type, &buf[HEADER_LEN..end]),
        rest: &buf[end..],
    })
}

/// Blocking read of one frame. `Ok(None)` on a clean end of stream at a
/// frame boundary.
pub fn read_frame(r: &mut impl Read) -> Result<Option<Frame>, FrameError> {
    let mut header = [0u8; HEADER_LEN];
    let mut got = 0;
    while got < HEADER_LEN {
        match r.read(&mut header[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(FrameError::Io(io::ErrorKind::UnexpectedEof.into())),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let (len, frame_type) = parse_header(&header)?;
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload)?;
    Ok(Some(Frame { frame_type, payload }))
}

pub fn write_frame(w: &mut impl Write, frame: &Frame) -> Result<(), FrameError> {
    w.write_all(&encode_frame(frame)?)?;
    Ok(())
}
