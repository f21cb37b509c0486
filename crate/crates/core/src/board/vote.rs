use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Placement, PieceClass};

/// One frame of per-square class labels, index 0 = a1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObservationGrid(#[serde(with = "grid_serde")] pub Placement);

impl ObservationGrid {
    pub fn from_placement(p: Placement) -> Self {
        ObservationGrid(p)
    }
}

mod grid_serde {
    use super::{Placement, PieceClass};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &Placement, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(p.iter().map(|c| c.index() as u8))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Placement, D::Error> {
        let v = Vec::<u8>::deserialize(d)?;
        if v.len() != 64 {
            return Err(D::Error::custom(format!("expected 64 squares, got {}", v.len())));
        }
        let mut out = [PieceClass::Empty; 64];
        for (slot, i) in out.iter_mut().zip(v) {
            *slot = PieceClass::from_index(i as usize).ok_or_else(|| D::Error::custom(format!("bad class {i}")))?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum VoteError {
    #[error("buffer size must be at least 1")]
    ZeroSize,
    #[error("threshold {0} outside (0, 1]")]
    BadThreshold(f64),
}

/// Outcome of one push: committed labels and which squares were decided
/// by this push's vote rather than carried over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Commit {
    pub labels: Placement,
    pub fresh: [bool; 64],
}

#[derive(Debug, Clone)]
pub struct VoteBuffer {
    n: usize,
    tau: f64,
    ring: VecDeque<ObservationGrid>,
    committed: Placement,
}

impl VoteBuffer {
    pub fn new(n: usize, tau: f64, initial: Placement) -> Result<Self, VoteError> {
        if n == 0 {
            return Err(VoteError::ZeroSize);
        }
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(VoteError::BadThreshold(tau));
        }
        Ok(VoteBuffer {
            n,
            tau,
            ring: VecDeque::with_capacity(n),
            committed: initial,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn is_full(&self) -> bool {
        self.ring.len() == self.n
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    pub fn committed(&self) -> &Placement {
        &self.committed
    }

    /// Drops buffered frames and resets the committed board.
    pub fn reset(&mut self, initial: Placement) {
        self.ring.clear();
        self.committed = initial;
    }

    pub fn push(&mut self, grid: ObservationGrid) -> Commit {
        if self.ring.len() == self.n {
            self.ring.pop_front();
        }
        self.ring.push_back(grid);
        let mut fresh = [false; 64];
        if self.is_full() {
            let decided = VoteBuffer::vote(self.ring.make_contiguous(), self.n, self.tau);
            for (sq, d) in decided.iter().enumerate() {
                if let Some(label) = d {
                    self.committed[sq] = *label;
                    fresh[sq] = true;
                }
            }
        }
        Commit {
            labels: self.committed,
            fresh,
        }
    }

    /// Per-square majority over `frames`: `Some(label)` where the top
    /// class reaches `tau` of `n`, `None` where the previous label stays.
    /// Ties in the count go to the lowest class index.
    pub fn vote(frames: &[ObservationGrid], n: usize, tau: f64) -> [Option<PieceClass>; 64] {
        let mut out = [None; 64];
        for (sq, slot) in out.iter_mut().enumerate() {
            let mut counts = [0usize; PieceClass::COUNT];
            for f in frames {
                counts[f.0[sq].index()] += 1;
            }
            let mut top = 0;
            for k in 1..PieceClass::COUNT {
                if counts[k] > counts[top] {
                    top = k;
                }
            }
            if counts[top] as f64 / n as f64 >= tau {
                *slot = PieceClass::from_index(top);
            }
        }
        out
    }
}
