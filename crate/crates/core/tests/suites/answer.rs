use std::collections::BTreeMap;

use egopilot_core::answer::{extract_choice, majority_vote};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use super::Outcome;

#[derive(Deserialize)]
struct Labeled {
    completion: String,
    options: usize,
    expected: Option<char>,
}

pub fn corpus() -> Outcome {
    let path = crate::common::fixtures::root().join("answer/extract_choice.jsonl");
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut n = 0;
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let item: Labeled = serde_json::from_str(line).map_err(|e| format!("line {}: {e}", i + 1))?;
        let got = extract_choice(&item.completion, item.options);
        if got != item.expected {
            return Err(format!(
                "line {}: {:?} gave {got:?}, labeled {:?}",
                i + 1,
                item.completion,
                item.expected
            ));
        }
        n += 1;
    }
    if n < 40 {
        return Err(format!("corpus has {n} completions"));
    }
    Ok(format!("{n}/{n} hand-labeled completions"))
}

/// Most frequent letter, smallest on ties, computed by counting.
fn reference_vote(votes: &[Option<char>]) -> Option<char> {
    let mut counts: BTreeMap<char, usize> = BTreeMap::new();
    for v in votes.iter().flatten() {
        *counts.entry(*v).or_default() += 1;
    }
    let top = *counts.values().max()?;
    counts.into_iter().find(|&(_, n)| n == top).map(|(c, _)| c)
}

pub fn vote_permutations(shuffles: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..shuffles {
        let len = rng.gen_range(0..12);
        let letters = rng.gen_range(1..=5u8);
        let mut votes: Vec<Option<char>> = (0..len)
            .map(|_| rng.gen_bool(0.8).then(|| (b'A' + rng.gen_range(0..letters)) as char))
            .collect();
        let before = majority_vote(&votes).ok();
        if before != reference_vote(&votes) {
            return Err(format!("{votes:?}: {before:?}"));
        }
        votes.shuffle(&mut rng);
        let after = majority_vote(&votes).ok();
        if after != before {
            return Err(format!("shuffle {i} of {votes:?} changed {before:?} to {after:?}"));
        }
    }
    Ok(format!("majority_vote unchanged under {shuffles} shuffles"))
}
