//! C ABI for the egopilot core.
//!
//! Conventions: every fallible call returns an [`EgoStatus`]; on failure a
//! message for the calling thread is available from
//! [`ego_last_error_message`]. Handles are opaque and freed with their
//! `_free` function. Buffers returned by the library are released with
//! [`ego_bytes_free`] or [`ego_string_free`]. No call panics across the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use egopilot_core::answer::extract_choice;
use egopilot_core::audio::{Vad, VadConfig, VadEvent};
use egopilot_core::board::{
    best_move, fen_decode, fen_encode, legal_moves, perft, BoardError, EngineConfig, ObservationGrid, PieceClass,
    VoteBuffer,
};
use egopilot_core::transport::{decode_frame, encode_frame, Decoded, Frame, FrameError, FrameType};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EgoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    /// The input ends mid-frame; nothing was consumed.
    NeedMore = 4,
    UnknownFrameType = 5,
    OversizeFrame = 6,
    InvalidFen = 7,
    InvalidPosition = 8,
    NoLegalMoves = 9,
    BufferTooSmall = 10,
    NotFound = 11,
    Panic = 99,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: EgoStatus, msg: impl Into<String>) -> EgoStatus {
    set_error(msg);
    status
}

/// Runs `f`, converting a panic into [`EgoStatus::Panic`].
fn guard(f: impl FnOnce() -> EgoStatus) -> EgoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(EgoStatus::Panic, "internal panic"),
    }
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ego_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static, NUL-terminated.
#[no_mangle]
pub extern "C" fn ego_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, EgoStatus> {
    if p.is_null() {
        return Err(fail(EgoStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| fail(EgoStatus::InvalidUtf8, e.to_string()))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize) -> Result<&'a [T], EgoStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(EgoStatus::NullPointer, "null buffer with nonzero length"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn board_status(e: BoardError) -> EgoStatus {
    let status = match &e {
        BoardError::Fen(_) => EgoStatus::InvalidFen,
        BoardError::NoLegalMoves => EgoStatus::NoLegalMoves,
        BoardError::InvalidPosition(_) => EgoStatus::InvalidPosition,
        _ => EgoStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

fn frame_status(e: FrameError) -> EgoStatus {
    let status = match e {
        FrameError::UnknownFrameType(_) => EgoStatus::UnknownFrameType,
        FrameError::OversizeFrame(_) => EgoStatus::OversizeFrame,
        FrameError::Io(_) => EgoStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

fn into_raw_bytes(v: Vec<u8>, out: *mut *mut u8, out_len: *mut usize) {
    let boxed = v.into_boxed_slice();
    let len = boxed.len();
    let p = Box::into_raw(boxed) as *mut u8;
    unsafe {
        *out = p;
        *out_len = len;
    }
}

/// Releases a buffer returned by this library. Null is ignored.
///
/// # Safety
/// `p` and `len` must come from one library call and be freed once.
#[no_mangle]
pub unsafe extern "C" fn ego_bytes_free(p: *mut u8, len: usize) {
    if !p.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(p, len)));
    }
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and be freed once.
#[no_mangle]
pub unsafe extern "C" fn ego_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Encodes one frame. The result is freed with [`ego_bytes_free`].
///
/// # Safety
/// `payload` must be readable for `len` bytes; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ego_frame_encode(
    frame_type: u8,
    payload: *const u8,
    len: usize,
    out: *mut *mut u8,
    out_len: *mut usize,
) -> EgoStatus {
    guard(|| {
        if out.is_null() || out_len.is_null() {
            return fail(EgoStatus::NullPointer, "null output pointer");
        }
        let ft = match FrameType::from_byte(frame_type) {
            Ok(t) => t,
            Err(e) => return frame_status(e),
        };
        let payload = match slice_arg(payload, len) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match encode_frame(&Frame::new(ft, payload)) {
            Ok(bytes) => {
                into_raw_bytes(bytes, out, out_len);
                EgoStatus::Ok
            }
            Err(e) => frame_status(e),
        }
    })
}

/// Decodes the frame at the front of `buf`. On [`EgoStatus::NeedMore`],
/// `*consumed` is 0 and `*needed` holds the minimum number of extra bytes.
/// The payload is freed with [`ego_bytes_free`].
///
/// # Safety
/// `buf` must be readable for `len` bytes; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ego_frame_decode(
    buf: *const u8,
    len: usize,
    out_type: *mut u8,
    out_payload: *mut *mut u8,
    out_payload_len: *mut usize,
    consumed: *mut usize,
    needed: *mut usize,
) -> EgoStatus {
    guard(|| {
        if out_type.is_null() || out_payload.is_null() || out_payload_len.is_null() || consumed.is_null() || needed.is_null() {
            return fail(EgoStatus::NullPointer, "null output pointer");
        }
        let input = match slice_arg(buf, len) {
            Ok(b) => b,
            Err(s) => return s,
        };
        *consumed = 0;
        *needed = 0;
        match decode_frame(input) {
            Ok(Decoded::Complete { frame, rest }) => {
                *out_type = frame.frame_type as u8;
                *consumed = input.len() - rest.len();
                into_raw_bytes(frame.payload, out_payload, out_payload_len);
                EgoStatus::Ok
            }
            Ok(Decoded::NeedMore(n)) => {
                *needed = n;
                EgoStatus::NeedMore
            }
            Err(e) => frame_status(e),
        }
    })
}

/// Voice activity detector state for one audio stream.
pub struct EgoVad {
    vad: Vad,
    segment: Vec<i16>,
}

/// Creates a detector. `config_json` may be null for defaults, or a JSON
/// object overriding any of: sample_rate, chunk_samples, gain, theta_start,
/// theta_barge_in, t_silence_ms, t_min_ms, preroll_ms. Null on error.
///
/// # Safety
/// `config_json` is null or a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ego_vad_new(config_json: *const c_char) -> *mut EgoVad {
    let mut handle = ptr::null_mut();
    guard(|| {
        let cfg = if config_json.is_null() {
            VadConfig::default()
        } else {
            let text = match str_arg(config_json) {
                Ok(t) => t,
                Err(s) => return s,
            };
            match serde_json::from_str::<VadConfig>(text) {
                Ok(c) => c,
                Err(e) => return fail(EgoStatus::InvalidArgument, format!("VAD config: {e}")),
            }
        };
        match Vad::new(cfg) {
            Ok(vad) => {
                handle = Box::into_raw(Box::new(EgoVad { vad, segment: Vec::new() }));
                EgoStatus::Ok
            }
            Err(e) => fail(EgoStatus::InvalidArgument, e.to_string()),
        }
    });
    handle
}

/// Feeds one chunk. `*halt` reports a barge-in; `*dispatched` reports a
/// finished utterance, readable through [`ego_vad_segment`].
///
/// # Safety
/// `vad` comes from [`ego_vad_new`]; `samples` is readable for `n` values.
#[no_mangle]
pub unsafe extern "C" fn ego_vad_process(
    vad: *mut EgoVad,
    samples: *const i16,
    n: usize,
    playing: bool,
    halt: *mut bool,
    dispatched: *mut bool,
) -> EgoStatus {
    guard(|| {
        if vad.is_null() || halt.is_null() || dispatched.is_null() {
            return fail(EgoStatus::NullPointer, "null argument");
        }
        let v = &mut *vad;
        let chunk = match slice_arg(samples, n) {
            Ok(c) => c,
            Err(s) => return s,
        };
        *halt = false;
        *dispatched = false;
        match v.vad.process(chunk, playing) {
            Ok(events) => {
                for e in events {
                    match e {
                        VadEvent::HaltPlayback => *halt = true,
                        VadEvent::Dispatch(seg) => {
                            v.segment = seg;
                            *dispatched = true;
                        }
                    }
                }
                EgoStatus::Ok
            }
            Err(e) => fail(EgoStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// The most recently dispatched segment, borrowed until the next call on
/// this handle.
///
/// # Safety
/// `vad` comes from [`ego_vad_new`]; outputs are writable.
#[no_mangle]
pub unsafe extern "C" fn ego_vad_segment(vad: *const EgoVad, out: *mut *const i16, out_len: *mut usize) -> EgoStatus {
    guard(|| {
        if vad.is_null() || out.is_null() || out_len.is_null() {
            return fail(EgoStatus::NullPointer, "null argument");
        }
        let v = &*vad;
        *out = v.segment.as_ptr();
        *out_len = v.segment.len();
        EgoStatus::Ok
    })
}

/// # Safety
/// `vad` comes from [`ego_vad_new`] and is freed once. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ego_vad_free(vad: *mut EgoVad) {
    if !vad.is_null() {
        drop(Box::from_raw(vad));
    }
}

/// Best move in coordinate notation (e.g. `e2e4`, `e7e8q`) written
/// NUL-terminated into `out` of `cap` bytes; score in centipawns from the
/// mover's side.
///
/// # Safety
/// `fen` is NUL-terminated; `out` is writable for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn ego_best_move(
    fen: *const c_char,
    depth: u32,
    out: *mut c_char,
    cap: usize,
    score_cp: *mut i32,
) -> EgoStatus {
    guard(|| {
        if out.is_null() || score_cp.is_null() {
            return fail(EgoStatus::NullPointer, "null output pointer");
        }
        let state = match str_arg(fen).map(fen_decode) {
            Ok(Ok(s)) => s,
            Ok(Err(e)) => return fail(EgoStatus::InvalidFen, e.to_string()),
            Err(s) => return s,
        };
        let r = match best_move(&state, &EngineConfig::with_depth(depth)) {
            Ok(r) => r,
            Err(e) => return board_status(e),
        };
        let text = r.best.to_string();
        if cap < text.len() + 1 {
            return fail(EgoStatus::BufferTooSmall, format!("need {} bytes", text.len() + 1));
        }
        ptr::copy_nonoverlapping(text.as_ptr(), out.cast::<u8>(), text.len());
        *out.add(text.len()) = 0;
        *score_cp = r.score_cp;
        EgoStatus::Ok
    })
}

/// # Safety
/// `fen` is NUL-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ego_legal_move_count(fen: *const c_char, out: *mut u32) -> EgoStatus {
    guard(|| {
        if out.is_null() {
            return fail(EgoStatus::NullPointer, "null output pointer");
        }
        let state = match str_arg(fen).map(fen_decode) {
            Ok(Ok(s)) => s,
            Ok(Err(e)) => return fail(EgoStatus::InvalidFen, e.to_string()),
            Err(s) => return s,
        };
        match legal_moves(&state) {
            Ok(m) => {
                *out = m.len() as u32;
                EgoStatus::Ok
            }
            Err(e) => board_status(e),
        }
    })
}

/// # Safety
/// `fen` is NUL-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ego_perft(fen: *const c_char, depth: u32, out: *mut u64) -> EgoStatus {
    guard(|| {
        if out.is_null() {
            return fail(EgoStatus::NullPointer, "null output pointer");
        }
        let state = match str_arg(fen).map(fen_decode) {
            Ok(Ok(s)) => s,
            Ok(Err(e)) => return fail(EgoStatus::InvalidFen, e.to_string()),
            Err(s) => return s,
        };
        match perft(&state, depth) {
            Ok(n) => {
                *out = n;
                EgoStatus::Ok
            }
            Err(e) => board_status(e),
        }
    })
}

/// Canonical FEN of `fen`, freed with [`ego_string_free`]. Null on error.
///
/// # Safety
/// `fen` is NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ego_fen_normalize(fen: *const c_char) -> *mut c_char {
    let mut result = ptr::null_mut();
    guard(|| match str_arg(fen).map(fen_decode) {
        Ok(Ok(s)) => {
            result = CString::new(fen_encode(&s)).expect("FEN has no NUL").into_raw();
            EgoStatus::Ok
        }
        Ok(Err(e)) => fail(EgoStatus::InvalidFen, e.to_string()),
        Err(s) => s,
    });
    result
}

/// Temporal vote over the last `n` observed boards.
pub struct EgoVoteBuffer(VoteBuffer);

/// Creates a vote buffer whose committed board starts empty. Null on a
/// zero size or a threshold outside (0, 1].
#[no_mangle]
pub extern "C" fn ego_vote_new(n: usize, tau: f64) -> *mut EgoVoteBuffer {
    match VoteBuffer::new(n, tau, [PieceClass::Empty; 64]) {
        Ok(b) => Box::into_raw(Box::new(EgoVoteBuffer(b))),
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// Pushes one grid of 64 class indices (a1 first; 0 empty, 1-6 white
/// P N B R Q K, 7-12 black). Writes the committed labels and, per square,
/// 1 where this push decided the label.
///
/// # Safety
/// `labels` is readable for 64 bytes; outputs are writable for 64 bytes.
#[no_mangle]
pub unsafe extern "C" fn ego_vote_push(
    buf: *mut EgoVoteBuffer,
    labels: *const u8,
    out_labels: *mut u8,
    out_fresh: *mut u8,
) -> EgoStatus {
    guard(|| {
        if buf.is_null() || labels.is_null() || out_labels.is_null() || out_fresh.is_null() {
            return fail(EgoStatus::NullPointer, "null argument");
        }
        let mut grid = [PieceClass::Empty; 64];
        for (sq, slot) in grid.iter_mut().enumerate() {
            let raw = *labels.add(sq);
            match PieceClass::from_index(raw as usize) {
                Some(c) => *slot = c,
                None => return fail(EgoStatus::InvalidArgument, format!("square {sq}: class {raw} out of range")),
            }
        }
        let commit = (*buf).0.push(ObservationGrid(grid));
        for sq in 0..64 {
            *out_labels.add(sq) = commit.labels[sq].index() as u8;
            *out_fresh.add(sq) = commit.fresh[sq] as u8;
        }
        EgoStatus::Ok
    })
}

/// # Safety
/// `buf` comes from [`ego_vote_new`] and is freed once. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ego_vote_free(buf: *mut EgoVoteBuffer) {
    if !buf.is_null() {
        drop(Box::from_raw(buf));
    }
}

/// Answer letter found in a model completion, or [`EgoStatus::NotFound`].
///
/// # Safety
/// `completion` is NUL-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ego_extract_choice(completion: *const c_char, num_options: usize, out: *mut c_char) -> EgoStatus {
    guard(|| {
        if out.is_null() {
            return fail(EgoStatus::NullPointer, "null output pointer");
        }
        let text = match str_arg(completion) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match extract_choice(text, num_options) {
            Some(c) => {
                *out = c as u8 as c_char;
                EgoStatus::Ok
            }
            None => fail(EgoStatus::NotFound, "no answer letter"),
        }
    })
}
