//! Desk-scale stand-in for the per-square classifier: the true board
//! with independent per-square label noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BoardState, ObservationGrid, PieceClass, Placement};

fn noisy<R: Rng>(truth: &Placement, p: f64, rng: &mut R) -> ObservationGrid {
    let mut out = *truth;
    for cell in out.iter_mut() {
        if rng.gen::<f64>() < p {
            // Uniform over the 12 classes other than the true one.
            let mut k = rng.gen_range(0..PieceClass::COUNT - 1);
            if k >= cell.index() {
                k += 1;
            }
            *cell = PieceClass::from_index(k).expect("in range");
        }
    }
    ObservationGrid(out)
}

/// Each square is replaced, with probability `p`, by a uniformly chosen
/// different class. Deterministic in `seed`.
pub fn simulate_observation(truth: &BoardState, p: f64, seed: u64) -> ObservationGrid {
    noisy(&truth.placement, p, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// A stream of noisy frames of a (changeable) true board.
#[derive(Debug, Clone)]
pub struct SimCamera {
    truth: Placement,
    p: f64,
    rng: ChaCha8Rng,
}

impl SimCamera {
    pub fn new(truth: &BoardState, p: f64, seed: u64) -> Self {
        SimCamera {
            truth: truth.placement,
            p,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn set_truth(&mut self, truth: &BoardState) {
        self.truth = truth.placement;
    }

    pub fn truth(&self) -> &Placement {
        &self.truth
    }

    pub fn noise(&self) -> f64 {
        self.p
    }

    pub fn capture(&mut self) -> ObservationGrid {
        noisy(&self.truth, self.p, &mut self.rng)
    }
}
