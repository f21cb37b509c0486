//! Fixed-depth negamax with alpha-beta pruning. Scores are integer
//! centipawns from the side to move's perspective.

use serde::{Deserialize, Serialize};

use super::movegen::{apply, is_in_check, legal_unchecked};
use super::{BoardError, BoardState, Kind, Move};

/// Score of being mated at the root; each ply to the mate shaves off
/// one pawn (100 cp), so faster mates score higher.
pub const MATE_SCORE: i32 = 1_000_000;
const PLY_PENALTY: i32 = 100;
const INF: i32 = i32::MAX / 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalWeights {
    pub pawn: i32,
    pub knight: i32,
    pub bishop: i32,
    pub rook: i32,
    pub queen: i32,
    /// Per legal move of mobility difference.
    pub mobility: i32,
}

impl Default for EvalWeights {
    fn default() -> Self {
        EvalWeights {
            pawn: 100,
            knight: 300,
            bishop: 300,
            rook: 500,
            queen: 900,
            mobility: 10,
        }
    }
}

impl EvalWeights {
    fn value(&self, k: Kind) -> i32 {
        match k {
            Kind::Pawn => self.pawn,
            Kind::Knight => self.knight,
            Kind::Bishop => self.bishop,
            Kind::Rook => self.rook,
            Kind::Queen => self.queen,
            Kind::King => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub depth: u32,
    pub weights: EvalWeights,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            depth: 3,
            weights: EvalWeights::default(),
        }
    }
}

impl EngineConfig {
    pub fn with_depth(depth: u32) -> Self {
        EngineConfig {
            depth,
            ..EngineConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchResult {
    pub best: Move,
    pub score_cp: i32,
}

impl SearchResult {
    /// Score in pawns.
    pub fn score(&self) -> f64 {
        self.score_cp as f64 / 100.0
    }

    pub fn is_mate(&self) -> bool {
        self.score_cp.abs() > MATE_SCORE / 2
    }
}

fn eval_with(s: &BoardState, own_moves: usize, w: &EvalWeights) -> i32 {
    let us = s.side_to_move;
    let mut material = 0;
    for p in s.placement {
        if let (Some(c), Some(k)) = (p.color(), p.kind()) {
            let v = w.value(k);
            material += if c == us { v } else { -v };
        }
    }
    let mut flipped = *s;
    flipped.side_to_move = us.other();
    flipped.en_passant = None;
    let theirs = legal_unchecked(&flipped).len() as i32;
    material + w.mobility * (own_moves as i32 - theirs)
}

/// Static evaluation of a validated position, side to move's view.
pub fn evaluate(s: &BoardState, w: &EvalWeights) -> Result<i32, BoardError> {
    s.validate()?;
    Ok(eval_with(s, legal_unchecked(s).len(), w))
}

fn terminal(s: &BoardState, ply: i32) -> i32 {
    if is_in_check(s, s.side_to_move) {
        -(MATE_SCORE - PLY_PENALTY * ply)
    } else {
        0
    }
}

fn negamax(s: &BoardState, depth: u32, ply: i32, mut alpha: i32, beta: i32, w: &EvalWeights) -> i32 {
    let moves = legal_unchecked(s);
    if moves.is_empty() {
        return terminal(s, ply);
    }
    if depth == 0 {
        return eval_with(s, moves.len(), w);
    }
    let mut best = -INF;
    for m in moves {
        let v = -negamax(&apply(s, m), depth - 1, ply + 1, -beta, -alpha, w);
        best = best.max(v);
        alpha = alpha.max(v);
        if alpha >= beta {
            break;
        }
    }
    best
}

fn plain(s: &BoardState, depth: u32, ply: i32, w: &EvalWeights) -> i32 {
    let moves = legal_unchecked(s);
    if moves.is_empty() {
        return terminal(s, ply);
    }
    if depth == 0 {
        return eval_with(s, moves.len(), w);
    }
    moves
        .into_iter()
        .map(|m| -plain(&apply(s, m), depth - 1, ply + 1, w))
        .max()
        .expect("non-empty")
}

fn root(s: &BoardState, cfg: &EngineConfig, pruned: bool) -> Result<SearchResult, BoardError> {
    if cfg.depth == 0 {
        return Err(BoardError::Config("depth must be at least 1".into()));
    }
    s.validate()?;
    let moves = legal_unchecked(s);
    let mut found: Option<SearchResult> = None;
    let mut alpha = -INF;
    for m in moves {
        let child = apply(s, m);
        let v = if pruned {
            -negamax(&child, cfg.depth - 1, 1, -INF, -alpha, &cfg.weights)
        } else {
            -plain(&child, cfg.depth - 1, 1, &cfg.weights)
        };
        // First strictly better move wins, so ties go to the lowest move.
        if found.is_none_or(|f| v > f.score_cp) {
            found = Some(SearchResult { best: m, score_cp: v });
        }
        alpha = alpha.max(v);
    }
    found.ok_or(BoardError::NoLegalMoves)
}

/// Best move by fixed-depth alpha-beta search.
pub fn best_move(s: &BoardState, cfg: &EngineConfig) -> Result<SearchResult, BoardError> {
    root(s, cfg, true)
}

/// Unpruned reference search with identical scoring and tie-breaking.
pub fn minimax(s: &BoardState, cfg: &EngineConfig) -> Result<SearchResult, BoardError> {
    root(s, cfg, false)
}
