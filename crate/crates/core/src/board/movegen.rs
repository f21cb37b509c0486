//! Copy-make move generation over the 64-square mailbox.

use super::{file_of, rank_of, square, BoardError, BoardState, Color, Kind, Move, PieceClass, Square};

const KNIGHT: [(i8, i8); 8] = [(1, 2), (2, 1), (2, -1), (1, -2), (-1, -2), (-2, -1), (-2, 1), (-1, 2)];
const KING: [(i8, i8); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];
const ORTHO: [(i8, i8); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
const DIAG: [(i8, i8); 4] = [(1, 1), (-1, 1), (-1, -1), (1, -1)];
const PROMOTIONS: [Kind; 4] = [Kind::Knight, Kind::Bishop, Kind::Rook, Kind::Queen];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameStatus {
    Ongoing,
    Checkmate,
    Stalemate,
}

fn step(sq: Square, df: i8, dr: i8) -> Option<Square> {
    let f = file_of(sq) as i8 + df;
    let r = rank_of(sq) as i8 + dr;
    ((0..8).contains(&f) && (0..8).contains(&r)).then(|| square(f as u8, r as u8))
}

fn forward(c: Color) -> i8 {
    match c {
        Color::White => 1,
        Color::Black => -1,
    }
}

/// Whether `sq` is attacked by any piece of color `by`.
pub fn attacked_by(s: &BoardState, sq: Square, by: Color) -> bool {
    // Pawns of `by` attack diagonally forward, so look backwards from sq.
    let pawn = PieceClass::piece(by, Kind::Pawn);
    for df in [-1, 1] {
        if let Some(t) = step(sq, df, -forward(by)) {
            if s.at(t) == pawn {
                return true;
            }
        }
    }
    let knight = PieceClass::piece(by, Kind::Knight);
    if KNIGHT.iter().any(|&(df, dr)| step(sq, df, dr).is_some_and(|t| s.at(t) == knight)) {
        return true;
    }
    let king = PieceClass::piece(by, Kind::King);
    if KING.iter().any(|&(df, dr)| step(sq, df, dr).is_some_and(|t| s.at(t) == king)) {
        return true;
    }
    let queen = PieceClass::piece(by, Kind::Queen);
    let rook = PieceClass::piece(by, Kind::Rook);
    let bishop = PieceClass::piece(by, Kind::Bishop);
    ray_hits(s, sq, &ORTHO, |p| p == rook || p == queen) || ray_hits(s, sq, &DIAG, |p| p == bishop || p == queen)
}

fn ray_hits(s: &BoardState, sq: Square, dirs: &[(i8, i8)], hit: impl Fn(PieceClass) -> bool) -> bool {
    for &(df, dr) in dirs {
        let mut cur = sq;
        while let Some(t) = step(cur, df, dr) {
            let p = s.at(t);
            if p != PieceClass::Empty {
                if hit(p) {
                    return true;
                }
                break;
            }
            cur = t;
        }
    }
    false
}

pub fn is_in_check(s: &BoardState, color: Color) -> bool {
    s.king_square(color).is_some_and(|k| attacked_by(s, k, color.other()))
}

fn pseudo_moves(s: &BoardState, out: &mut Vec<Move>) {
    let us = s.side_to_move;
    for from in 0..64u8 {
        let p = s.at(from);
        if p.color() != Some(us) {
            continue;
        }
        match p.kind().expect("non-empty") {
            Kind::Pawn => pawn_moves(s, from, us, out),
            Kind::Knight => leaper(s, from, us, &KNIGHT, out),
            Kind::King => {
                leaper(s, from, us, &KING, out);
                castle_moves(s, from, us, out);
            }
            Kind::Bishop => slider(s, from, us, &DIAG, out),
            Kind::Rook => slider(s, from, us, &ORTHO, out),
            Kind::Queen => {
                slider(s, from, us, &ORTHO, out);
                slider(s, from, us, &DIAG, out);
            }
        }
    }
}

fn push_pawn(from: Square, to: Square, out: &mut Vec<Move>) {
    if rank_of(to) == 0 || rank_of(to) == 7 {
        for k in PROMOTIONS {
            out.push(Move {
                from,
                to,
                promotion: Some(k),
            });
        }
    } else {
        out.push(Move::new(from, to));
    }
}

fn pawn_moves(s: &BoardState, from: Square, us: Color, out: &mut Vec<Move>) {
    let dir = forward(us);
    if let Some(one) = step(from, 0, dir) {
        if s.at(one) == PieceClass::Empty {
            push_pawn(from, one, out);
            let home = if us == Color::White { 1 } else { 6 };
            if rank_of(from) == home {
                let two = step(one, 0, dir).expect("on board");
                if s.at(two) == PieceClass::Empty {
                    out.push(Move::new(from, two));
                }
            }
        }
    }
    for df in [-1, 1] {
        if let Some(t) = step(from, df, dir) {
            let target = s.at(t);
            if target.color() == Some(us.other()) || s.en_passant == Some(t) {
                push_pawn(from, t, out);
            }
        }
    }
}

fn leaper(s: &BoardState, from: Square, us: Color, deltas: &[(i8, i8)], out: &mut Vec<Move>) {
    for &(df, dr) in deltas {
        if let Some(t) = step(from, df, dr) {
            if s.at(t).color() != Some(us) {
                out.push(Move::new(from, t));
            }
        }
    }
}

fn slider(s: &BoardState, from: Square, us: Color, dirs: &[(i8, i8)], out: &mut Vec<Move>) {
    for &(df, dr) in dirs {
        let mut cur = from;
        while let Some(t) = step(cur, df, dr) {
            let c = s.at(t).color();
            if c == Some(us) {
                break;
            }
            out.push(Move::new(from, t));
            if c.is_some() {
                break;
            }
            cur = t;
        }
    }
}

fn castle_moves(s: &BoardState, from: Square, us: Color, out: &mut Vec<Move>) {
    let (home, kside, qside) = match us {
        Color::White => (4, s.castling.white_king, s.castling.white_queen),
        Color::Black => (60, s.castling.black_king, s.castling.black_queen),
    };
    if from != home || !(kside || qside) {
        return;
    }
    let them = us.other();
    let rook = PieceClass::piece(us, Kind::Rook);
    let empty = |sq: Square| s.at(sq) == PieceClass::Empty;
    if attacked_by(s, home, them) {
        return;
    }
    if kside
        && s.at(home + 3) == rook
        && empty(home + 1)
        && empty(home + 2)
        && !attacked_by(s, home + 1, them)
        && !attacked_by(s, home + 2, them)
    {
        out.push(Move::new(home, home + 2));
    }
    if qside
        && s.at(home - 4) == rook
        && empty(home - 1)
        && empty(home - 2)
        && empty(home - 3)
        && !attacked_by(s, home - 1, them)
        && !attacked_by(s, home - 2, them)
    {
        out.push(Move::new(home, home - 2));
    }
}

/// Plays `m` without checking legality.
pub(crate) fn apply(s: &BoardState, m: Move) -> BoardState {
    let mut n = *s;
    let us = s.side_to_move;
    let piece = s.at(m.from);
    let captured = s.at(m.to);
    let is_pawn = piece.kind() == Some(Kind::Pawn);
    n.placement[m.from as usize] = PieceClass::Empty;

    if is_pawn && Some(m.to) == s.en_passant && file_of(m.from) != file_of(m.to) && captured == PieceClass::Empty {
        let victim = step(m.to, 0, -forward(us)).expect("on board");
        n.placement[victim as usize] = PieceClass::Empty;
    }
    n.placement[m.to as usize] = match m.promotion {
        Some(k) => PieceClass::piece(us, k),
        None => piece,
    };
    if piece.kind() == Some(Kind::King) && m.from.abs_diff(m.to) == 2 {
        let (rook_from, rook_to) = if m.to > m.from { (m.from + 3, m.from + 1) } else { (m.from - 4, m.from - 1) };
        n.placement[rook_to as usize] = n.placement[rook_from as usize];
        n.placement[rook_from as usize] = PieceClass::Empty;
    }

    if piece.kind() == Some(Kind::King) {
        match us {
            Color::White => {
                n.castling.white_king = false;
                n.castling.white_queen = false;
            }
            Color::Black => {
                n.castling.black_king = false;
                n.castling.black_queen = false;
            }
        }
    }
    for sq in [m.from, m.to] {
        match sq {
            0 => n.castling.white_queen = false,
            7 => n.castling.white_king = false,
            56 => n.castling.black_queen = false,
            63 => n.castling.black_king = false,
            _ => {}
        }
    }

    n.en_passant = (is_pawn && m.from.abs_diff(m.to) == 16).then(|| (m.from + m.to) / 2);
    n.halfmove = if is_pawn || captured != PieceClass::Empty { 0 } else { s.halfmove + 1 };
    if us == Color::Black {
        n.fullmove += 1;
    }
    n.side_to_move = us.other();
    n
}

/// Legal moves of an already validated position.
pub(crate) fn legal_unchecked(s: &BoardState) -> Vec<Move> {
    let mut moves = Vec::with_capacity(48);
    pseudo_moves(s, &mut moves);
    let us = s.side_to_move;
    moves.retain(|&m| !is_in_check(&apply(s, m), us));
    moves.sort_unstable();
    moves
}

/// All legal moves sorted by (from, to, promotion).
pub fn legal_moves(s: &BoardState) -> Result<Vec<Move>, BoardError> {
    s.validate()?;
    Ok(legal_unchecked(s))
}

pub fn make_move(s: &BoardState, m: Move) -> Result<BoardState, BoardError> {
    if !legal_moves(s)?.contains(&m) {
        return Err(BoardError::InvalidPosition(format!("illegal move {m}")));
    }
    Ok(apply(s, m))
}

pub fn status(s: &BoardState) -> Result<GameStatus, BoardError> {
    if !legal_moves(s)?.is_empty() {
        Ok(GameStatus::Ongoing)
    } else if is_in_check(s, s.side_to_move) {
        Ok(GameStatus::Checkmate)
    } else {
        Ok(GameStatus::Stalemate)
    }
}

pub fn perft(s: &BoardState, depth: u32) -> Result<u64, BoardError> {
    s.validate()?;
    Ok(perft_inner(s, depth))
}

fn perft_inner(s: &BoardState, depth: u32) -> u64 {
    if depth == 0 {
        return 1;
    }
    let moves = legal_unchecked(s);
    if depth == 1 {
        return moves.len() as u64;
    }
    moves.iter().map(|&m| perft_inner(&apply(s, m), depth - 1)).sum()
}
