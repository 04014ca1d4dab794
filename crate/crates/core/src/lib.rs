//! Exact and numerical tools for automatic sequences evaluated along
//! Piatetski-Shapiro indices `⌊n^c⌋`, primes, and polynomial indices.

pub mod arith;
pub mod arrangement;
pub mod automaton;
pub mod cli;
pub mod complexity;
pub mod equidist;
pub mod error;
pub mod exactmath;
pub mod par;
pub mod sequences;

pub use error::{Error, Result};
