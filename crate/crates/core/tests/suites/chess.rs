use egopilot_core::board::{
    best_move, evaluate, fen_decode, fen_encode, legal_moves, make_move, perft, BoardState, EngineConfig, Move,
    MATE_SCORE, START_FEN,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Outcome;
use crate::oracle::chess;

pub fn start_perft() -> Outcome {
    let s = BoardState::start();
    let o = chess::parse(START_FEN);
    let mut got = Vec::new();
    for depth in 1..=3 {
        let lib = perft(&s, depth).map_err(|e| e.to_string())?;
        let oracle = chess::perft(&o, depth);
        if lib != oracle {
            return Err(format!("perft({depth}) = {lib}, oracle {oracle}"));
        }
        got.push(lib.to_string());
    }
    if got != ["20", "400", "8902"] {
        return Err(format!("perft(1..3) = {}", got.join("/")));
    }
    Ok(format!("perft(1..3) = {} matches the oracle", got.join("/")))
}

fn reference_search(s: &BoardState, depth: u32, ply: i32, cfg: &EngineConfig) -> i32 {
    let moves = legal_moves(s).unwrap();
    if moves.is_empty() {
        return if chess::is_checkmate(&chess::parse(&fen_encode(s))) {
            -(MATE_SCORE - 100 * ply)
        } else {
            0
        };
    }
    if depth == 0 {
        return evaluate(s, &cfg.weights).unwrap();
    }
    moves
        .into_iter()
        .map(|m| -reference_search(&make_move(s, m).unwrap(), depth - 1, ply + 1, cfg))
        .max()
        .unwrap()
}

/// Unpruned negamax over the public move API; the first of equal moves
/// in sorted order wins.
pub fn reference_best(s: &BoardState, cfg: &EngineConfig) -> (Move, i32) {
    let mut best: Option<(Move, i32)> = None;
    for m in legal_moves(s).unwrap() {
        let v = -reference_search(&make_move(s, m).unwrap(), cfg.depth - 1, 1, cfg);
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((m, v));
        }
    }
    best.unwrap()
}

pub fn random_position(rng: &mut ChaCha8Rng, max_plies: usize) -> BoardState {
    let mut s = BoardState::start();
    for _ in 0..rng.gen_range(2..max_plies) {
        let moves = legal_moves(&s).unwrap();
        let Some(&m) = moves.choose(rng) else { break };
        s = make_move(&s, m).unwrap();
    }
    s
}

pub fn alpha_beta_vs_minimax(positions: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    while checked < positions {
        let s = random_position(&mut rng, 40);
        if legal_moves(&s).unwrap().is_empty() {
            continue;
        }
        let cfg = EngineConfig::with_depth(1 + (checked % 3) as u32);
        let got = best_move(&s, &cfg).map_err(|e| e.to_string())?;
        let want = reference_best(&s, &cfg);
        if (got.best, got.score_cp) != want {
            return Err(format!(
                "{} depth {}: alpha-beta {} {} vs minimax {} {}",
                fen_encode(&s),
                cfg.depth,
                got.best,
                got.score_cp,
                want.0,
                want.1
            ));
        }
        checked += 1;
    }
    Ok(format!("alpha-beta = minimax on {positions} random positions (depth 1-3)"))
}

pub fn mate_in_one() -> Outcome {
    let path = crate::common::fixtures::root().join("chess/mate_in_one.txt");
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut n = 0;
    for fen in text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')) {
        let s = fen_decode(fen).map_err(|e| format!("{fen}: {e}"))?;
        let r = best_move(&s, &EngineConfig::with_depth(2)).map_err(|e| format!("{fen}: {e}"))?;
        let after = chess::play(&chess::parse(fen), &r.best.to_string());
        if !chess::is_checkmate(&after) || r.score_cp != MATE_SCORE - 100 {
            return Err(format!("{fen}: played {} scoring {}", r.best, r.score_cp));
        }
        n += 1;
    }
    Ok(format!("{n}/{n} mate-in-one fixtures solved at depth 2"))
}
