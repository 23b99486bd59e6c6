//! Software model of a vacuum-noise quantum random number generator built
//! around a broadband balanced homodyne receiver.
//!
//! The crate follows the signal chain end to end:
//!
//! - [`receiver`]: shot and electronic noise PSDs, clearance, CMRR and
//!   waveform synthesis for the homodyne receiver.
//! - [`acquisition`]: 8-bit mid-riser quantisation and bit packing.
//! - [`entropy`]: Gaussian-model and most-common-value min-entropy, and the
//!   leftover-hash output budget.
//! - [`extractor`]: Toeplitz-hash extraction, a reference and a fast kernel.
//! - [`stattests`]: the SP800-22 rev1a battery with its two meta-analyses.
//! - [`duobinary`]: reuse of the receiver as a 10 Gb/s duobinary / 4 Gb/s
//!   OOK link with Monte Carlo BER and eye diagrams.
//! - [`pipeline`]: configuration, file formats and the stages behind the
//!   `vqrng` binary.

pub mod acquisition;
pub mod bessel;
pub mod bits;
pub mod duobinary;
pub mod entropy;
pub mod error;
pub mod extractor;
pub mod noise;
pub mod pipeline;
pub mod receiver;
pub mod seed;
pub mod special;
pub mod stattests;
pub mod units;
pub mod welch;

pub use bits::BitString;
pub use error::{Error, Result};
