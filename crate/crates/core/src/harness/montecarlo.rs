//! Monte-Carlo check of the temporal vote against its binomial value.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{HarnessError, ItemOutcome, RunReport};
use crate::board::{fen_decode, PieceClass, SimCamera, VoteBuffer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McParams {
    pub fen: String,
    pub p: f64,
    pub n: usize,
    pub tau: f64,
    pub trials: usize,
    pub seed: u64,
    /// Allowed |empirical - analytic|.
    pub tolerance: f64,
}

/// Smallest vote count that commits, using the same comparison as the
/// buffer.
pub fn commit_quorum(n: usize, tau: f64) -> usize {
    (0..=n).find(|&k| k as f64 / n as f64 >= tau).unwrap_or(n + 1)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// P[Binomial(n, 1 - p) >= quorum]: the chance the true label is seen
/// often enough to commit on the first full ring. A flip always produces a
/// different class, so the per-frame probability of the truth is 1 - p.
/// For tau > 1/2 no other class can also reach the quorum, so this is the
/// exact first-commit correctness; below that it is an upper bound.
pub fn analytic_commit_rate(n: usize, p: f64, tau: f64) -> f64 {
    let q = 1.0 - p;
    (commit_quorum(n, tau)..=n)
        .map(|k| binomial(n, k) * q.powi(k as i32) * p.powi((n - k) as i32))
        .sum()
}

/// Each trial fills a fresh buffer with `n` noisy frames and scores the
/// share of squares whose first commit (on the frame that fills the ring)
/// is the true label. Squares that do not commit count as incorrect.
pub fn board_montecarlo(params: &McParams) -> Result<RunReport, HarnessError> {
    let started = Instant::now();
    let truth = fen_decode(&params.fen).map_err(|e| HarnessError::Invalid(format!("fen: {e}")))?;
    if !(0.0..=1.0).contains(&params.p) {
        return Err(HarnessError::Invalid(format!("p = {} outside [0, 1]", params.p)));
    }
    let mut camera = SimCamera::new(&truth, params.p, params.seed);
    let mut committed_total = 0usize;
    let mut correct_total = 0usize;
    let mut items = Vec::with_capacity(params.trials);
    for t in 0..params.trials {
        let mut buf = VoteBuffer::new(params.n, params.tau, [PieceClass::Empty; 64])
            .map_err(|e| HarnessError::Invalid(e.to_string()))?;
        let mut commit = None;
        for _ in 0..params.n {
            commit = Some(buf.push(camera.capture()));
        }
        let commit = commit.expect("n >= 1");
        let committed = commit.fresh.iter().filter(|f| **f).count();
        let correct = (0..64)
            .filter(|&sq| commit.fresh[sq] && commit.labels[sq] == truth.placement[sq])
            .count();
        committed_total += committed;
        correct_total += correct;
        items.push(ItemOutcome {
            id: format!("trial-{t}"),
            passed: correct == 64,
            score: correct as f64 / 64.0,
            detail: json!({"committed": committed, "correct": correct}),
        });
    }
    let analytic = analytic_commit_rate(params.n, params.p, params.tau);
    let mut report = RunReport::new("board-mc", serde_json::to_value(params).expect("params serialize"), items);
    let diff = (report.aggregate - analytic).abs();
    report.passed = diff <= params.tolerance;
    report.metrics.insert("analytic".into(), analytic);
    report.metrics.insert("empirical".into(), report.aggregate);
    report.metrics.insert("abs_diff".into(), diff);
    report.metrics.insert("quorum".into(), commit_quorum(params.n, params.tau) as f64);
    let squares = (params.trials * 64).max(1) as f64;
    report.metrics.insert("commit_rate".into(), committed_total as f64 / squares);
    if committed_total > 0 {
        report
            .metrics
            .insert("correct_given_commit".into(), correct_total as f64 / committed_total as f64);
    }
    report.wall = started.elapsed();
    Ok(report)
}
