//! Board co-pilot: temporal vote smoothing of per-square observations,
//! a small deterministic chess engine, and the coaching tool on top.

mod fen;
mod movegen;
mod search;
mod sim;
mod tool;
mod vote;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fen::{fen_decode, fen_encode, FenError, START_FEN};
pub use movegen::{is_in_check, legal_moves, make_move, perft, status, GameStatus};
pub use search::{best_move, evaluate, minimax, EngineConfig, EvalWeights, SearchResult, MATE_SCORE};
pub use sim::{simulate_observation, SimCamera};
pub use tool::{coach_prompt, execute_board_tool, Advice, BoardTool, GameMeta};
pub use vote::{Commit, ObservationGrid, VoteBuffer, VoteError};

pub type Square = u8;

pub fn square(file: u8, rank: u8) -> Square {
    rank * 8 + file
}

pub fn file_of(sq: Square) -> u8 {
    sq % 8
}

pub fn rank_of(sq: Square) -> u8 {
    sq / 8
}

pub fn square_name(sq: Square) -> String {
    format!("{}{}", (b'a' + file_of(sq)) as char, rank_of(sq) + 1)
}

pub fn parse_square(s: &str) -> Option<Square> {
    let b = s.as_bytes();
    if b.len() != 2 || !(b'a'..=b'h').contains(&b[0]) || !(b'1'..=b'8').contains(&b[1]) {
        return None;
    }
    Some(square(b[0] - b'a', b[1] - b'1'))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    White,
    Black,
}

impl Color {
    pub fn other(self) -> Color {
        match self {
            Color::White => Color::Black,
            Color::Black => Color::White,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Pawn,
    Knight,
    Bishop,
    Rook,
    Queen,
    King,
}

impl Kind {
    pub const ALL: [Kind; 6] = [Kind::Pawn, Kind::Knight, Kind::Bishop, Kind::Rook, Kind::Queen, Kind::King];

    pub fn letter(self) -> char {
        match self {
            Kind::Pawn => 'p',
            Kind::Knight => 'n',
            Kind::Bishop => 'b',
            Kind::Rook => 'r',
            Kind::Queen => 'q',
            Kind::King => 'k',
        }
    }

    pub fn from_letter(c: char) -> Option<Kind> {
        Some(match c.to_ascii_lowercase() {
            'p' => Kind::Pawn,
            'n' => Kind::Knight,
            'b' => Kind::Bishop,
            'r' => Kind::Rook,
            'q' => Kind::Queen,
            'k' => Kind::King,
            _ => return None,
        })
    }
}

/// The 13 per-square classes. The discriminant order is the fixed class
/// index used to break vote ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[repr(u8)]
pub enum PieceClass {
    #[default]
    Empty = 0,
    WhitePawn,
    WhiteKnight,
    WhiteBishop,
    WhiteRook,
    WhiteQueen,
    WhiteKing,
    BlackPawn,
    BlackKnight,
    BlackBishop,
    BlackRook,
    BlackQueen,
    BlackKing,
}

impl PieceClass {
    pub const COUNT: usize = 13;

    pub const ALL: [PieceClass; 13] = [
        PieceClass::Empty,
        PieceClass::WhitePawn,
        PieceClass::WhiteKnight,
        PieceClass::WhiteBishop,
        PieceClass::WhiteRook,
        PieceClass::WhiteQueen,
        PieceClass::WhiteKing,
        PieceClass::BlackPawn,
        PieceClass::BlackKnight,
        PieceClass::BlackBishop,
        PieceClass::BlackRook,
        PieceClass::BlackQueen,
        PieceClass::BlackKing,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<PieceClass> {
        PieceClass::ALL.get(i).copied()
    }

    pub fn piece(color: Color, kind: Kind) -> PieceClass {
        let base = match color {
            Color::White => 1,
            Color::Black => 7,
        };
        PieceClass::ALL[base + kind as usize]
    }

    pub fn color(self) -> Option<Color> {
        match self as u8 {
            0 => None,
            1..=6 => Some(Color::White),
            _ => Some(Color::Black),
        }
    }

    pub fn kind(self) -> Option<Kind> {
        match self as usize {
            0 => None,
            i => Some(Kind::ALL[(i - 1) % 6]),
        }
    }

    pub fn is(self, color: Color, kind: Kind) -> bool {
        self == PieceClass::piece(color, kind)
    }

    pub fn fen_char(self) -> Option<char> {
        let k = self.kind()?.letter();
        Some(match self.color()? {
            Color::White => k.to_ascii_uppercase(),
            Color::Black => k,
        })
    }

    pub fn from_fen_char(c: char) -> Option<PieceClass> {
        let kind = Kind::from_letter(c)?;
        let color = if c.is_ascii_uppercase() { Color::White } else { Color::Black };
        Some(PieceClass::piece(color, kind))
    }
}

pub type Placement = [PieceClass; 64];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Castling {
    pub white_king: bool,
    pub white_queen: bool,
    pub black_king: bool,
    pub black_queen: bool,
}

impl Castling {
    pub const ALL: Castling = Castling {
        white_king: true,
        white_queen: true,
        black_king: true,
        black_queen: true,
    };

    pub fn none() -> Castling {
        Castling::default()
    }
}

/// Full position: committed placement plus the game metadata that
/// perception cannot observe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoardState {
    pub placement: Placement,
    pub side_to_move: Color,
    pub castling: Castling,
    pub en_passant: Option<Square>,
    pub halfmove: u32,
    pub fullmove: u32,
}

impl BoardState {
    pub fn start() -> BoardState {
        fen_decode(START_FEN).expect("start position")
    }

    pub fn empty() -> BoardState {
        BoardState {
            placement: [PieceClass::Empty; 64],
            side_to_move: Color::White,
            castling: Castling::none(),
            en_passant: None,
            halfmove: 0,
            fullmove: 1,
        }
    }

    pub fn at(&self, sq: Square) -> PieceClass {
        self.placement[sq as usize]
    }

    pub fn king_square(&self, color: Color) -> Option<Square> {
        let king = PieceClass::piece(color, Kind::King);
        self.placement.iter().position(|&p| p == king).map(|i| i as Square)
    }

    /// Checks that the engine can run on this position.
    pub fn validate(&self) -> Result<(), BoardError> {
        for color in [Color::White, Color::Black] {
            let king = PieceClass::piece(color, Kind::King);
            let n = self.placement.iter().filter(|&&p| p == king).count();
            if n != 1 {
                return Err(BoardError::InvalidPosition(format!("{color:?} has {n} kings")));
            }
        }
        for sq in (0..8).chain(56..64) {
            if self.placement[sq].kind() == Some(Kind::Pawn) {
                return Err(BoardError::InvalidPosition(format!(
                    "pawn on back rank at {}",
                    square_name(sq as Square)
                )));
            }
        }
        if is_in_check(self, self.side_to_move.other()) {
            return Err(BoardError::InvalidPosition("side not to move is in check".into()));
        }
        Ok(())
    }

    /// Swaps colors and flips ranks, so the mirrored position is the same
    /// game seen from the other side.
    pub fn mirrored(&self) -> BoardState {
        let mut placement = [PieceClass::Empty; 64];
        for (sq, &p) in self.placement.iter().enumerate() {
            let m = square(file_of(sq as Square), 7 - rank_of(sq as Square)) as usize;
            placement[m] = match (p.color(), p.kind()) {
                (Some(c), Some(k)) => PieceClass::piece(c.other(), k),
                _ => PieceClass::Empty,
            };
        }
        BoardState {
            placement,
            side_to_move: self.side_to_move.other(),
            castling: Castling {
                white_king: self.castling.black_king,
                white_queen: self.castling.black_queen,
                black_king: self.castling.white_king,
                black_queen: self.castling.white_queen,
            },
            en_passant: self.en_passant.map(|s| square(file_of(s), 7 - rank_of(s))),
            halfmove: self.halfmove,
            fullmove: self.fullmove,
        }
    }
}

impl fmt::Display for BoardState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&fen_encode(self))
    }
}

impl FromStr for BoardState {
    type Err = FenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        fen_decode(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Move {
    pub from: Square,
    pub to: Square,
    pub promotion: Option<Kind>,
}

impl Move {
    pub fn new(from: Square, to: Square) -> Move {
        Move { from, to, promotion: None }
    }

    /// Parses coordinate notation such as `e2e4` or `e7e8q`.
    pub fn parse(s: &str) -> Option<Move> {
        if !s.is_ascii() || !(4..=5).contains(&s.len()) {
            return None;
        }
        let from = parse_square(&s[0..2])?;
        let to = parse_square(&s[2..4])?;
        let promotion = match s[4..].chars().next() {
            None => None,
            Some(c) => match Kind::from_letter(c)? {
                Kind::Pawn | Kind::King => return None,
                k => Some(k),
            },
        };
        Some(Move { from, to, promotion })
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", square_name(self.from), square_name(self.to))?;
        if let Some(k) = self.promotion {
            write!(f, "{}", k.letter())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BoardError {
    #[error("invalid position: {0}")]
    InvalidPosition(String),
    #[error("no legal moves")]
    NoLegalMoves,
    #[error("perception unstable: {0}")]
    PerceptionUnstable(String),
    #[error(transparent)]
    Fen(#[from] FenError),
    #[error("invalid engine config: {0}")]
    Config(String),
}
