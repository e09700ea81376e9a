//! Multiplexed quantum random number generation toolkit.
//!
//! The signal path mirrors a bank of balanced homodyne detectors measuring
//! vacuum noise:
//!
//! ```text
//! source (Gaussian q + e) -> adc (12-bit codes) -> extractors -> pipeline (interleave)
//!                                   |                  |
//!                              entropy (H_min)     stats (STS subset, correlation)
//! ```
//!
//! Every stage is deterministic given the channel seeds, so any output file
//! can be reproduced byte for byte from its run manifest.

// `!(x > 0.0)` is used deliberately so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adc;
pub mod entropy;
mod error;
pub mod extractors;
pub mod io;
pub mod pipeline;
pub mod source;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
