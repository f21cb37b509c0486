use egopilot_core::board::{ObservationGrid, PieceClass, VoteBuffer, START_FEN};
use egopilot_core::harness::{analytic_commit_rate, board_montecarlo, McParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Outcome;
use crate::oracle::vote::commit_correct;

pub const N: usize = 5;
pub const TAU: f64 = 0.6;
pub const P: f64 = 0.2;

/// Exact first-commit correctness, enumerated for an empty square and a
/// king square (different tie-break positions).
pub fn enumerated() -> f64 {
    let a = commit_correct(N, P, TAU, PieceClass::COUNT, PieceClass::Empty.index());
    let b = commit_correct(N, P, TAU, PieceClass::COUNT, PieceClass::BlackKing.index());
    assert!((a - b).abs() < 1e-12);
    a
}

/// Monte-Carlo first-commit correctness against the enumerated value.
pub fn montecarlo(trials: usize, seed: u64) -> Outcome {
    let exact = enumerated();
    let lib = analytic_commit_rate(N, P, TAU);
    if (lib - exact).abs() > 1e-12 {
        return Err(format!("library analytic value {lib} differs from enumeration {exact}"));
    }
    let r = board_montecarlo(&McParams {
        fen: START_FEN.into(),
        p: P,
        n: N,
        tau: TAU,
        trials,
        seed,
        tolerance: 0.01,
    })
    .map_err(|e| e.to_string())?;
    let empirical = r.metrics["empirical"];
    let diff = (empirical - exact).abs();
    let detail = format!("{trials} trials: empirical {empirical:.5} vs analytic {exact:.5} (|diff| {diff:.5})");
    if diff <= 0.01 && r.passed {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Raising tau never commits a square that a lower tau leaves open, nor
/// commits a different label.
pub fn tau_monotone(buffers: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    for _ in 0..buffers {
        let n = rng.gen_range(1..=9);
        // few distinct labels per square so ties and quorums both occur
        let palette: Vec<PieceClass> = (0..3).map(|_| PieceClass::ALL[rng.gen_range(0..13)]).collect();
        let frames: Vec<ObservationGrid> = (0..n)
            .map(|_| ObservationGrid(std::array::from_fn(|_| palette[rng.gen_range(0..palette.len())])))
            .collect();
        let mut lo = rng.gen_range(0.01..=1.0f64);
        let mut hi = rng.gen_range(0.01..=1.0f64);
        if lo > hi {
            std::mem::swap(&mut lo, &mut hi);
        }
        let a = VoteBuffer::vote(&frames, n, lo);
        let b = VoteBuffer::vote(&frames, n, hi);
        for sq in 0..64 {
            if b[sq].is_some() && a[sq] != b[sq] {
                violations += 1;
            }
        }
        // the streaming buffer agrees with the one-shot vote
        let mut buf = VoteBuffer::new(n, hi, [PieceClass::Empty; 64]).unwrap();
        let mut last = None;
        for f in &frames {
            last = Some(buf.push(*f));
        }
        let last = last.unwrap();
        for sq in 0..64 {
            if last.fresh[sq] != b[sq].is_some() || b[sq].is_some_and(|l| last.labels[sq] != l) {
                violations += 1;
            }
        }
    }
    let detail = format!("{buffers} random buffers, {violations} monotonicity violations");
    if violations == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}
