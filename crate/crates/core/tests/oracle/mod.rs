//! Independent reference implementations used as test oracles. None of
//! them share code with the crate under test.
#![allow(dead_code)]

pub mod chess;
pub mod vad;
pub mod vote;
