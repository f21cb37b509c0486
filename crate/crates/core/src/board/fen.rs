use thiserror::Error;

use super::{parse_square, rank_of, square, square_name, BoardState, Castling, Color, PieceClass};

pub const START_FEN: &str = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";

/// `field` is the 0-based index of the offending FEN field.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("FEN field {field}: {reason}")]
pub struct FenError {
    pub field: usize,
    pub reason: String,
}

fn err(field: usize, reason: impl Into<String>) -> FenError {
    FenError {
        field,
        reason: reason.into(),
    }
}

pub fn fen_encode(s: &BoardState) -> String {
    let mut out = String::with_capacity(90);
    for rank in (0..8).rev() {
        let mut gap = 0;
        for file in 0..8 {
            match s.placement[square(file, rank) as usize].fen_char() {
                None => gap += 1,
                Some(c) => {
                    if gap > 0 {
                        out.push(char::from(b'0' + gap));
                        gap = 0;
                    }
                    out.push(c);
                }
            }
        }
        if gap > 0 {
            out.push(char::from(b'0' + gap));
        }
        if rank > 0 {
            out.push('/');
        }
    }
    out.push(' ');
    out.push(match s.side_to_move {
        Color::White => 'w',
        Color::Black => 'b',
    });
    out.push(' ');
    let c = s.castling;
    let rights: String = [(c.white_king, 'K'), (c.white_queen, 'Q'), (c.black_king, 'k'), (c.black_queen, 'q')]
        .iter()
        .filter(|(on, _)| *on)
        .map(|(_, ch)| *ch)
        .collect();
    out.push_str(if rights.is_empty() { "-" } else { &rights });
    out.push(' ');
    match s.en_passant {
        Some(sq) => out.push_str(&square_name(sq)),
        None => out.push('-'),
    }
    out.push_str(&format!(" {} {}", s.halfmove, s.fullmove));
    out
}

pub fn fen_decode(text: &str) -> Result<BoardState, FenError> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() < 6 {
        return Err(err(fields.len(), "missing field"));
    }
    if fields.len() > 6 {
        return Err(err(6, "too many fields"));
    }

    let mut placement = [PieceClass::Empty; 64];
    let ranks: Vec<&str> = fields[0].split('/').collect();
    if ranks.len() != 8 {
        return Err(err(0, format!("expected 8 ranks, found {}", ranks.len())));
    }
    for (i, row) in ranks.iter().enumerate() {
        let rank = 7 - i as u8;
        let mut file = 0u8;
        for ch in row.chars() {
            if let Some(d) = ch.to_digit(10) {
                if !(1..=8).contains(&d) {
                    return Err(err(0, format!("bad gap `{ch}`")));
                }
                file += d as u8;
            } else {
                let p = PieceClass::from_fen_char(ch).ok_or_else(|| err(0, format!("bad piece `{ch}`")))?;
                if file >= 8 {
                    return Err(err(0, format!("rank {} is longer than 8", rank + 1)));
                }
                placement[square(file, rank) as usize] = p;
                file += 1;
            }
            if file > 8 {
                return Err(err(0, format!("rank {} is longer than 8", rank + 1)));
            }
        }
        if file != 8 {
            return Err(err(0, format!("rank {} covers {file} files", rank + 1)));
        }
    }

    let side_to_move = match fields[1] {
        "w" => Color::White,
        "b" => Color::Black,
        other => return Err(err(1, format!("bad side `{other}`"))),
    };

    let mut castling = Castling::none();
    if fields[2] != "-" {
        for ch in fields[2].chars() {
            let slot = match ch {
                'K' => &mut castling.white_king,
                'Q' => &mut castling.white_queen,
                'k' => &mut castling.black_king,
                'q' => &mut castling.black_queen,
                _ => return Err(err(2, format!("bad castling flag `{ch}`"))),
            };
            if *slot {
                return Err(err(2, format!("repeated castling flag `{ch}`")));
            }
            *slot = true;
        }
    }

    let en_passant = match fields[3] {
        "-" => None,
        s => {
            let sq = parse_square(s).ok_or_else(|| err(3, format!("bad square `{s}`")))?;
            let want = match side_to_move {
                Color::White => 5,
                Color::Black => 2,
            };
            if rank_of(sq) != want {
                return Err(err(3, format!("en-passant square {s} on wrong rank")));
            }
            Some(sq)
        }
    };

    let halfmove = fields[4]
        .parse::<u32>()
        .map_err(|_| err(4, format!("bad halfmove clock `{}`", fields[4])))?;
    let fullmove = fields[5]
        .parse::<u32>()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| err(5, format!("bad fullmove number `{}`", fields[5])))?;

    Ok(BoardState {
        placement,
        side_to_move,
        castling,
        en_passant,
        halfmove,
        fullmove,
    })
}
