//! Core auditing routines for binary random-number streams.
//!
//! Everything in this crate is pure computation over immutable data: packed
//! bit sequences, phase traces, exact integer counting statistics, Feller
//! coin-tossing constants, pattern waiting times, and conditional
//! Shannon/min-entropy with a-priori finite-size bounds. File formats, CLI,
//! and report assembly live in the companion `rng-audit` crate.
//!
//! The crate is `no_std` compatible (with `alloc`); transcendental math goes
//! through [`libm`] so results are bit-identical across platforms.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod bitstream;
pub mod entropy;
mod error;
pub mod feller;
pub mod math;
pub mod phase;
pub mod sources;
pub mod stats;

pub use bitstream::{BitStream, Origin};
pub use error::Error;
pub use phase::{IngestReport, PhaseTrace, ThresholdConfig};
pub use sources::{SourceConfig, SourceKind};

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
