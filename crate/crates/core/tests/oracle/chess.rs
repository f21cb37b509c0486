//! Naive mailbox move generator. Squares are 0..64 with a1 = 0, pieces
//! are signed bytes: positive white, negative black, 1..6 = P N B R Q K.

const N: i8 = 2;
const B: i8 = 3;
const R: i8 = 4;
const Q: i8 = 5;
const K: i8 = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct Pos {
    pub board: [i8; 64],
    pub white: bool,
    /// K, Q, k, q
    pub castle: [bool; 4],
    pub ep: Option<usize>,
}

fn sq_name(s: usize) -> String {
    format!("{}{}", (b'a' + (s % 8) as u8) as char, s / 8 + 1)
}

fn sq_parse(s: &str) -> usize {
    let b = s.as_bytes();
    (b[1] - b'1') as usize * 8 + (b[0] - b'a') as usize
}

pub fn parse(fen: &str) -> Pos {
    let f: Vec<&str> = fen.split_whitespace().collect();
    let mut board = [0i8; 64];
    for (i, row) in f[0].split('/').enumerate() {
        let rank = 7 - i;
        let mut file = 0;
        for c in row.chars() {
            if let Some(d) = c.to_digit(10) {
                file += d as usize;
                continue;
            }
            let v = match c.to_ascii_lowercase() {
                'p' => 1,
                'n' => N,
                'b' => B,
                'r' => R,
                'q' => Q,
                'k' => K,
                _ => panic!("bad piece {c}"),
            };
            board[rank * 8 + file] = if c.is_ascii_uppercase() { v } else { -v };
            file += 1;
        }
    }
    Pos {
        board,
        white: f[1] == "w",
        castle: [f[2].contains('K'), f[2].contains('Q'), f[2].contains('k'), f[2].contains('q')],
        ep: (f[3] != "-").then(|| sq_parse(f[3])),
    }
}

fn at(p: &Pos, file: i32, rank: i32) -> Option<i8> {
    ((0..8).contains(&file) && (0..8).contains(&rank)).then(|| p.board[(rank * 8 + file) as usize])
}

const KNIGHT: [(i32, i32); 8] = [(1, 2), (2, 1), (2, -1), (1, -2), (-1, -2), (-2, -1), (-2, 1), (-1, 2)];
const KING: [(i32, i32); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];
const ORTHO: [(i32, i32); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const DIAG: [(i32, i32); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Whether `white` (or black) attacks square `s`.
pub fn attacked(p: &Pos, s: usize, white: bool) -> bool {
    let (f, r) = ((s % 8) as i32, (s / 8) as i32);
    let sign: i8 = if white { 1 } else { -1 };
    // a white pawn attacking s sits one rank below it
    let pr = if white { r - 1 } else { r + 1 };
    for df in [-1, 1] {
        if at(p, f + df, pr) == Some(sign) {
            return true;
        }
    }
    for (df, dr) in KNIGHT {
        if at(p, f + df, r + dr) == Some(sign * N) {
            return true;
        }
    }
    for (df, dr) in KING {
        if at(p, f + df, r + dr) == Some(sign * K) {
            return true;
        }
    }
    for (dirs, a, b) in [(ORTHO, R, Q), (DIAG, B, Q)] {
        for (df, dr) in dirs {
            let (mut x, mut y) = (f + df, r + dr);
            while let Some(v) = at(p, x, y) {
                if v != 0 {
                    if v == sign * a || v == sign * b {
                        return true;
                    }
                    break;
                }
                x += df;
                y += dr;
            }
        }
    }
    false
}

fn in_check(p: &Pos, white: bool) -> bool {
    let king = if white { K } else { -K };
    match p.board.iter().position(|&v| v == king) {
        Some(s) => attacked(p, s, !white),
        None => false,
    }
}

/// Applies a coordinate move without checking legality.
pub fn play(p: &Pos, mv: &str) -> Pos {
    let from = sq_parse(&mv[0..2]);
    let to = sq_parse(&mv[2..4]);
    let mut n = p.clone();
    let piece = n.board[from];
    let sign = piece.signum();
    n.board[from] = 0;
    if piece.abs() == 1 && Some(to) == p.ep {
        let victim = if p.white { to - 8 } else { to + 8 };
        n.board[victim] = 0;
    }
    n.board[to] = match mv.as_bytes().get(4) {
        Some(b'n') => sign * N,
        Some(b'b') => sign * B,
        Some(b'r') => sign * R,
        Some(b'q') => sign * Q,
        _ => piece,
    };
    if piece.abs() == K && (from as i32 - to as i32).abs() == 2 {
        let (rf, rt) = if to > from { (from + 3, from + 1) } else { (from - 4, from - 1) };
        n.board[rt] = n.board[rf];
        n.board[rf] = 0;
    }
    n.ep = (piece.abs() == 1 && (from as i32 - to as i32).abs() == 16).then(|| (from + to) / 2);
    for (sq, right) in [(4, 0), (4, 1), (7, 0), (0, 1), (60, 2), (60, 3), (63, 2), (56, 3)] {
        if from == sq || to == sq {
            n.castle[right] = false;
        }
    }
    n.white = !p.white;
    n
}

fn pseudo(p: &Pos) -> Vec<String> {
    let sign: i8 = if p.white { 1 } else { -1 };
    let mut out = Vec::new();
    let mut push = |from: usize, to: usize, promo: bool| {
        if promo {
            for c in ['q', 'r', 'b', 'n'] {
                out.push(format!("{}{}{c}", sq_name(from), sq_name(to)));
            }
        } else {
            out.push(format!("{}{}", sq_name(from), sq_name(to)));
        }
    };
    for s in 0..64 {
        let v = p.board[s];
        if v.signum() != sign {
            continue;
        }
        let (f, r) = ((s % 8) as i32, (s / 8) as i32);
        let idx = |x: i32, y: i32| (y * 8 + x) as usize;
        match v.abs() {
            1 => {
                let dir = sign as i32;
                let last = if p.white { 7 } else { 0 };
                let home = if p.white { 1 } else { 6 };
                if at(p, f, r + dir) == Some(0) {
                    push(s, idx(f, r + dir), r + dir == last);
                    if r == home && at(p, f, r + 2 * dir) == Some(0) {
                        push(s, idx(f, r + 2 * dir), false);
                    }
                }
                for df in [-1, 1] {
                    if let Some(t) = at(p, f + df, r + dir) {
                        let target = idx(f + df, r + dir);
                        if t.signum() == -sign || Some(target) == p.ep {
                            push(s, target, r + dir == last);
                        }
                    }
                }
            }
            N | K => {
                let deltas = if v.abs() == N { KNIGHT } else { KING };
                for (df, dr) in deltas {
                    if let Some(t) = at(p, f + df, r + dr) {
                        if t.signum() != sign {
                            push(s, idx(f + df, r + dr), false);
                        }
                    }
                }
            }
            kind => {
                let dirs: Vec<(i32, i32)> = match kind {
                    B => DIAG.to_vec(),
                    R => ORTHO.to_vec(),
                    _ => DIAG.iter().chain(ORTHO.iter()).copied().collect(),
                };
                for (df, dr) in dirs {
                    let (mut x, mut y) = (f + df, r + dr);
                    while let Some(t) = at(p, x, y) {
                        if t.signum() == sign {
                            break;
                        }
                        push(s, idx(x, y), false);
                        if t != 0 {
                            break;
                        }
                        x += df;
                        y += dr;
                    }
                }
            }
        }
    }
    // castling: rights, empty path, king not in check or crossing attacked squares
    let (base, k_right, q_right) = if p.white { (0, 0, 1) } else { (56, 2, 3) };
    let enemy = !p.white;
    if p.board[base + 4] == sign * K && !attacked(p, base + 4, enemy) {
        if p.castle[k_right]
            && p.board[base + 7] == sign * R
            && p.board[base + 5] == 0
            && p.board[base + 6] == 0
            && !attacked(p, base + 5, enemy)
        {
            out.push(format!("{}{}", sq_name(base + 4), sq_name(base + 6)));
        }
        if p.castle[q_right]
            && p.board[base] == sign * R
            && p.board[base + 1] == 0
            && p.board[base + 2] == 0
            && p.board[base + 3] == 0
            && !attacked(p, base + 3, enemy)
        {
            out.push(format!("{}{}", sq_name(base + 4), sq_name(base + 2)));
        }
    }
    out
}

/// Legal moves in coordinate notation, sorted as strings.
pub fn legal(p: &Pos) -> Vec<String> {
    let mut moves: Vec<String> = pseudo(p)
        .into_iter()
        .filter(|m| !in_check(&play(p, m), p.white))
        .collect();
    moves.sort();
    moves
}

pub fn perft(p: &Pos, depth: u32) -> u64 {
    if depth == 0 {
        return 1;
    }
    legal(p).iter().map(|m| perft(&play(p, m), depth - 1)).sum()
}

pub fn is_checkmate(p: &Pos) -> bool {
    legal(p).is_empty() && in_check(p, p.white)
}
