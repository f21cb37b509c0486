use std::io::Cursor;

use egopilot_core::transport::{decode_frame, encode_frame, read_frame, Decoded, Frame, FrameType, HEADER_LEN};
use proptest::prelude::*;

use super::{run_cases, Outcome};

/// Wire bytes written out by hand: length, type byte, payload.
pub fn reference_encoding(ty: u8, payload: &[u8]) -> Vec<u8> {
    let mut out = (payload.len() as u32).to_be_bytes().to_vec();
    out.push(ty);
    out.extend_from_slice(payload);
    out
}

pub fn frame() -> impl Strategy<Value = Frame> {
    let payload = prop_oneof![
        8 => proptest::collection::vec(any::<u8>(), 0..256),
        1 => proptest::collection::vec(any::<u8>(), 256..70_000),
    ];
    (proptest::sample::select(FrameType::ALL.to_vec()), payload).prop_map(|(t, p)| Frame::new(t, p))
}

/// Encode/decode identity, byte-exact against the hand-built layout, and
/// incomplete input always asks for more.
pub fn round_trip(cases: u32) -> Outcome {
    run_cases(cases, (frame(), any::<prop::sample::Index>()), |(f, cut)| {
        let bytes = encode_frame(&f).unwrap();
        prop_assert_eq!(&bytes, &reference_encoding(f.frame_type as u8, &f.payload));
        prop_assert_eq!(bytes.len(), f.encoded_len());
        match decode_frame(&bytes).unwrap() {
            Decoded::Complete { frame, rest } => {
                prop_assert_eq!(&frame, &f);
                prop_assert!(rest.is_empty());
            }
            other => return Err(TestCaseError::fail(format!("{other:?}"))),
        }
        let c = cut.index(bytes.len());
        match decode_frame(&bytes[..c]).unwrap() {
            Decoded::NeedMore(n) => {
                let want = if c < HEADER_LEN { HEADER_LEN - c } else { bytes.len() - c };
                prop_assert_eq!(n, want);
            }
            other => return Err(TestCaseError::fail(format!("prefix {c} decoded as {other:?}"))),
        }
        let mut r = Cursor::new(bytes);
        prop_assert_eq!(read_frame(&mut r).unwrap(), Some(f));
        prop_assert_eq!(read_frame(&mut r).unwrap(), None);
        Ok(())
    })?;
    Ok(format!("{cases} random frames round-tripped"))
}

/// A concatenated stream splits back into the same frames.
pub fn stream_round_trip(cases: u32) -> Outcome {
    run_cases(cases, proptest::collection::vec(frame(), 0..20), |frames| {
        let mut buf = Vec::new();
        for f in &frames {
            buf.extend(encode_frame(f).unwrap());
        }
        let mut back = Vec::new();
        let mut rest: &[u8] = &buf;
        while !rest.is_empty() {
            match decode_frame(rest).unwrap() {
                Decoded::Complete { frame, rest: r } => {
                    back.push(frame);
                    rest = r;
                }
                Decoded::NeedMore(n) => return Err(TestCaseError::fail(format!("needs {n} more"))),
            }
        }
        prop_assert_eq!(back, frames);
        Ok(())
    })?;
    Ok(format!("{cases} frame streams split back exactly"))
}
