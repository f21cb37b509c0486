//! Criterion-sized checks shared by the per-area tests and the
//! acceptance runner. Each returns a one-line detail on success and the
//! first counterexample on failure.
#![allow(dead_code)]

pub mod answer;
pub mod chess;
pub mod context;
pub mod vote;
pub mod frames;
pub mod guard;
pub mod transport;
pub mod vad;

pub type Outcome = Result<String, String>;

/// Runs `cases` proptest cases and flattens the result.
pub fn run_cases<S: proptest::strategy::Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), proptest::test_runner::TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let mut cfg = proptest::test_runner::Config::with_cases(cases);
    cfg.failure_persistence = None;
    let mut runner = proptest::test_runner::TestRunner::new_with_rng(
        cfg,
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    runner.run(&strategy, test).map_err(|e| e.to_string())
}
