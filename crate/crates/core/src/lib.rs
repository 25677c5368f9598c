//! Vocal performance analysis.
//!
//! A recording goes through [`audio_io`] (decode, mono, resample), [`preprocess`]
//! (drone notch and harmonic/percussive separation), [`features`] (pitch,
//! voice quality, loudness, timbre), [`scaling`] (nine rotation angles), and
//! [`quantum`] (a fixed 9-qubit circuit simulated as a statevector). The
//! resulting distributions are compared with [`compare`] and graded with
//! [`grader`]. [`report`] ties the stages together and defines the JSON schema
//! consumed by the `vocalq` command line tool.

// `!(x >= y)` is used on purpose so NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod audio_io;
pub mod compare;
mod dsp;
mod error;
pub mod features;
pub mod fixtures;
pub mod grader;
pub mod preprocess;
pub mod quantum;
pub mod report;
pub mod scaling;
pub mod svg;

pub use audio_io::AudioBuffer;
pub use error::{Error, Result};

/// Sample rate every analysis stage runs at.
pub const PIPELINE_RATE_HZ: u32 = 22050;
