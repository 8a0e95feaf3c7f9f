//! Short-time Fourier analysis/synthesis with weighted overlap-add.
//!
//! Padding rule: the signal is preceded by `fft_size - hop_size` zeros and
//! zero-extended at the end, giving `ceil((len + fft_size - hop_size) / hop_size)`
//! frames. Every input sample is then covered by the full set of overlapping
//! frames, so analysis followed by synthesis is an identity whenever the
//! product of analysis and synthesis windows overlap-adds to a constant.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use serde::{Deserialize, Serialize};

use super::AudioBuffer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    /// `sin(pi (n + 1/2) / N)`; its square is COLA at 50% overlap.
    Sine,
    /// Periodic Hann.
    Hann,
    Rectangular,
}

impl Window {
    pub fn coefficients(self, size: usize) -> Vec<f64> {
        let n = size as f64;
        (0..size)
            .map(|i| {
                let i = i as f64;
                match self {
                    Window::Sine => (PI * (i + 0.5) / n).sin(),
                    Window::Hann => 0.5 - 0.5 * (2.0 * PI * i / n).cos(),
                    Window::Rectangular => 1.0,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StftConfig {
    pub fft_size: usize,
    pub hop_size: usize,
    pub window: Window,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            fft_size: 2048,
            hop_size: 1024,
            window: Window::Sine,
        }
    }
}

impl StftConfig {
    /// Checks the geometry and returns the overlap-add constant of the
    /// squared window at this hop.
    pub fn validate(&self) -> Result<f64> {
        if self.fft_size < 2 || !self.fft_size.is_power_of_two() {
            return Err(Error::InvalidStft(format!(
                "fft_size {} is not a power of two",
                self.fft_size
            )));
        }
        if self.hop_size == 0 || self.hop_size > self.fft_size {
            return Err(Error::InvalidStft(format!(
                "hop_size {} must be in 1..={}",
                self.hop_size, self.fft_size
            )));
        }
        let w = self.window.coefficients(self.fft_size);
        let sums: Vec<f64> = (0..self.hop_size)
            .map(|n| w.iter().skip(n).step_by(self.hop_size).map(|x| x * x).sum())
            .collect();
        let lo = sums.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = sums.iter().cloned().fold(0.0, f64::max);
        if lo <= 0.0 || (hi - lo) / hi > 1e-10 {
            return Err(Error::InvalidStft(format!(
                "{:?} window is not overlap-add constant at hop {} (ratio {:.4})",
                self.window,
                self.hop_size,
                lo / hi
            )));
        }
        Ok(hi)
    }

    pub fn leading_pad(&self) -> usize {
        self.fft_size - self.hop_size
    }

    pub fn frame_count(&self, len: usize) -> usize {
        (len + self.leading_pad()).div_ceil(self.hop_size)
    }

    pub fn num_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }
}

/// Complex one-sided spectra of one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub frames: Vec<Vec<Complex64>>,
    pub config: StftConfig,
    pub sample_rate: u32,
    pub channel_id: usize,
    /// Length in samples of the analysed signal; synthesis trims to it.
    pub signal_len: usize,
}

impl Spectrogram {
    pub fn zeros(config: StftConfig, sample_rate: u32, signal_len: usize) -> Self {
        Self {
            frames: vec![
                vec![Complex64::new(0.0, 0.0); config.num_bins()];
                config.frame_count(signal_len)
            ],
            config,
            sample_rate,
            channel_id: 0,
            signal_len,
        }
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn num_bins(&self) -> usize {
        self.config.num_bins()
    }

    pub fn bin_frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.sample_rate as f64 / self.config.fft_size as f64
    }

    /// True when frame count, bin count and analysis settings agree.
    pub fn same_geometry(&self, other: &Spectrogram) -> bool {
        self.config == other.config
            && self.sample_rate == other.sample_rate
            && self.signal_len == other.signal_len
            && self.frames.len() == other.frames.len()
    }

    pub fn check_geometry(&self, other: &Spectrogram) -> Result<()> {
        if !self.same_geometry(other) {
            return Err(Error::Geometry(format!(
                "{} frames x {:?} @ {} Hz vs {} frames x {:?} @ {} Hz",
                self.frames.len(),
                self.config,
                self.sample_rate,
                other.frames.len(),
                other.config,
                other.sample_rate
            )));
        }
        Ok(())
    }
}

struct Plans {
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

fn plans(fft_size: usize) -> Plans {
    let mut planner = RealFftPlanner::<f64>::new();
    Plans {
        forward: planner.plan_fft_forward(fft_size),
        inverse: planner.plan_fft_inverse(fft_size),
    }
}

/// Analyses one channel of samples.
pub fn stft_samples(samples: &[f64], sample_rate: u32, config: StftConfig) -> Result<Spectrogram> {
    config.validate()?;
    let n = config.fft_size;
    let pad = config.leading_pad();
    let window = config.window.coefficients(n);
    let fft = plans(n).forward;
    let mut input = fft.make_input_vec();
    let mut scratch = fft.make_scratch_vec();
    let frames = (0..config.frame_count(samples.len()))
        .map(|f| {
            let start = (f * config.hop_size) as isize - pad as isize;
            for (i, slot) in input.iter_mut().enumerate() {
                let t = start + i as isize;
                *slot = if t >= 0 && (t as usize) < samples.len() {
                    samples[t as usize] * window[i]
                } else {
                    0.0
                };
            }
            let mut out = fft.make_output_vec();
            fft.process_with_scratch(&mut input, &mut out, &mut scratch)
                .expect("buffer sizes come from the plan");
            out
        })
        .collect();
    Ok(Spectrogram {
        frames,
        config,
        sample_rate,
        channel_id: 0,
        signal_len: samples.len(),
    })
}

/// Analyses every channel of a buffer; returns one spectrogram per channel.
pub fn stft(buffer: &AudioBuffer, config: StftConfig) -> Result<Vec<Spectrogram>> {
    buffer
        .channels()
        .iter()
        .enumerate()
        .map(|(c, ch)| {
            let mut spec = stft_samples(ch, buffer.sample_rate(), config)?;
            spec.channel_id = c;
            Ok(spec)
        })
        .collect()
}

/// Weighted overlap-add synthesis of one spectrogram into samples.
pub fn istft_samples(spec: &Spectrogram) -> Result<Vec<f64>> {
    let config = spec.config;
    let cola = config.validate()?;
    let n = config.fft_size;
    let bins = config.num_bins();
    if let Some((i, f)) = spec
        .frames
        .iter()
        .enumerate()
        .find(|(_, f)| f.len() != bins)
    {
        return Err(Error::Geometry(format!(
            "frame {i} has {} bins, expected {bins}",
            f.len()
        )));
    }
    if spec.frames.len() != config.frame_count(spec.signal_len) {
        return Err(Error::Geometry(format!(
            "{} frames for a {}-sample signal, expected {}",
            spec.frames.len(),
            spec.signal_len,
            config.frame_count(spec.signal_len)
        )));
    }
    let window = config.window.coefficients(n);
    let ifft = plans(n).inverse;
    let mut scratch = ifft.make_scratch_vec();
    let mut frame_in = ifft.make_input_vec();
    let mut frame_out = ifft.make_output_vec();
    let pad = config.leading_pad();
    let mut acc = vec![0.0; spec.frames.len() * config.hop_size + n];
    let scale = 1.0 / (n as f64 * cola);
    for (f, frame) in spec.frames.iter().enumerate() {
        frame_in.copy_from_slice(frame);
        // A real signal has real DC and Nyquist bins; drop any imaginary part.
        frame_in[0].im = 0.0;
        frame_in[bins - 1].im = 0.0;
        ifft.process_with_scratch(&mut frame_in, &mut frame_out, &mut scratch)
            .expect("buffer sizes come from the plan");
        let start = f * config.hop_size;
        for i in 0..n {
            acc[start + i] += frame_out[i] * window[i] * scale;
        }
    }
    Ok(acc[pad..pad + spec.signal_len].to_vec())
}

pub fn istft(spec: &Spectrogram) -> Result<AudioBuffer> {
    AudioBuffer::mono(spec.sample_rate, istft_samples(spec)?)
}

/// Synthesises a multichannel buffer from per-channel spectrograms.
pub fn istft_multi(specs: &[Spectrogram]) -> Result<AudioBuffer> {
    let first = specs.first().ok_or(Error::EmptyBuffer)?;
    let channels = specs
        .iter()
        .map(istft_samples)
        .collect::<Result<Vec<_>>>()?;
    AudioBuffer::new(first.sample_rate, channels)
}
