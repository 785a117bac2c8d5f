//! Simulation core for the quantum Metropolis-Hastings walk.
//!
//! The crate is `no_std` and only needs `alloc`. It contains a dense
//! statevector simulator, the discrete problem model with its brute-force
//! oracles, the coin-based walk operator, the matched classical
//! Metropolis-Hastings chain, time-to-solution arithmetic and the
//! renormalization/downsampling inference loop. IO, file formats and the
//! command-line front end live in the `qmetro` crate.

#![no_std]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod classical;
pub mod error;
pub mod problem;
pub mod qbird;
pub mod rng;
pub mod statevector;
pub mod tts;
pub mod walk;

pub use error::{Error, Result};
pub use problem::{CostModel, Move, ProblemSpec};
pub use statevector::{Gate, Register, RegisterLayout, Statevector};
pub use walk::{AnnealingSchedule, ReflectionTarget, WalkConfig};
