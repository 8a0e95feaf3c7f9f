//! Signal primitives: buffers, WAV I/O, STFT, mid/side matrix, anchors.

mod anchors;
mod buffer;
mod midside;
mod stft;
mod wav;

pub use anchors::{
    design_lowpass, lowpass_anchor, lowpass_anchor_with, mono_anchor, LowpassTemplate,
};
pub use buffer::{AudioBuffer, DATASET_SAMPLE_RATE};
pub use midside::{ms_forward, ms_inverse, MidSidePair, DEFAULT_MS_GAIN};
pub use stft::{
    istft, istft_multi, istft_samples, stft, stft_samples, Spectrogram, StftConfig, Window,
};
pub use wav::{read_wav, write_wav, BitDepth, WriteReport};
