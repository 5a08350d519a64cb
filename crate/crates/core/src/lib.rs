#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod classify;
pub mod context;
pub mod evaluation;
pub mod features;
pub mod optimizer;
pub mod rng;
pub mod runtime;
pub mod signal;
pub mod synth;
pub mod wavelet;

#[cfg(test)]
pub(crate) mod testkit;

/// Class number in `1..=C`.
pub type ClassLabel = u32;
