//! Stimulus generation for stereo coding-artifact listening tests.
//!
//! The crate covers the signal side of the experiment: audio primitives,
//! a masking model for noise-to-mask control, the quantization-noise and
//! spectral-hole generators with left/right and mid/side processing, the
//! rendering manifest, and MUSHRA trial planning.

pub mod artifacts;
pub mod audio;
pub mod error;
pub mod manifest;
pub mod planner;
pub mod psycho;
pub mod synth;

pub use error::{Error, Result};
