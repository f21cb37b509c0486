//! Exact per-square vote probabilities by enumerating every label
//! sequence a square can show across the buffer.

/// Probability that a full buffer of `n` noisy frames commits the true
/// label of one square. Each frame shows the truth with probability
/// 1 - p, otherwise one of the other `classes - 1` labels uniformly. The
/// vote takes the most frequent label (lowest index on ties) and commits
/// it when its count / n reaches `tau`.
pub fn commit_correct(n: usize, p: f64, tau: f64, classes: usize, truth: usize) -> f64 {
    let mut total = 0.0;
    let mut seq = vec![0usize; n];
    loop {
        let mut prob = 1.0;
        let mut counts = vec![0usize; classes];
        for &l in &seq {
            counts[l] += 1;
            prob *= if l == truth { 1.0 - p } else { p / (classes - 1) as f64 };
        }
        let mut top = 0;
        for k in 1..classes {
            if counts[k] > counts[top] {
                top = k;
            }
        }
        if top == truth && counts[top] as f64 / n as f64 >= tau {
            total += prob;
        }
        // next sequence, odometer style
        let mut i = 0;
        loop {
            if i == n {
                return total;
            }
            seq[i] += 1;
            if seq[i] < classes {
                break;
            }
            seq[i] = 0;
            i += 1;
        }
    }
}
