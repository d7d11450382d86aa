//! Simulation, diagnostics and file formats for multi-armed sequential
//! testing by betting, on top of [`spruce_core`].

// `!(x > 0.0)` is the NaN-rejecting form of a domain check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod distribution;
mod error;
pub mod harness;
pub mod output;
pub mod presets;
pub mod rng;
pub mod validate;

pub use error::{Result, SimError};
pub use spruce_core;
