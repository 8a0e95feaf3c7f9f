//! MUSHRA anchor conditions: band-limited and mono downmix.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::AudioBuffer;
use crate::error::{Error, Result};

/// Design template for the lowpass anchors, relative to the nominal cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowpassTemplate {
    /// Passband edge as a fraction of the cutoff.
    pub passband_ratio: f64,
    /// Stopband edge as a fraction of the cutoff.
    pub stopband_ratio: f64,
    /// Kaiser design attenuation in dB.
    pub attenuation_db: f64,
}

impl Default for LowpassTemplate {
    fn default() -> Self {
        Self {
            passband_ratio: 0.9,
            stopband_ratio: 1.25,
            attenuation_db: 70.0,
        }
    }
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let half = x / 2.0;
    for k in 1..200 {
        term *= (half / k as f64).powi(2);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Linear-phase Kaiser-windowed sinc; odd length, symmetric.
pub fn design_lowpass(
    cutoff: f64,
    sample_rate: u32,
    template: &LowpassTemplate,
) -> Result<Vec<f64>> {
    let nyquist = sample_rate as f64 / 2.0;
    if !(cutoff > 0.0 && cutoff < nyquist) {
        return Err(Error::CutoffAboveNyquist { cutoff, nyquist });
    }
    let pass = template.passband_ratio * cutoff;
    let stop = (template.stopband_ratio * cutoff).min(nyquist);
    let edge = 0.5 * (pass + stop);
    let width = 2.0 * PI * (stop - pass) / sample_rate as f64;
    let atten = template.attenuation_db;
    let beta = if atten > 50.0 {
        0.1102 * (atten - 8.7)
    } else if atten >= 21.0 {
        0.5842 * (atten - 21.0).powf(0.4) + 0.07886 * (atten - 21.0)
    } else {
        0.0
    };
    let mut order = ((atten - 8.0) / (2.285 * width)).ceil() as usize;
    order += order % 2;
    let center = order as f64 / 2.0;
    let fc = edge / sample_rate as f64;
    let norm = bessel_i0(beta);
    let taps: Vec<f64> = (0..=order)
        .map(|i| {
            let m = i as f64 - center;
            let sinc = if m == 0.0 {
                2.0 * fc
            } else {
                (2.0 * PI * fc * m).sin() / (PI * m)
            };
            let r = m / center;
            sinc * bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / norm
        })
        .collect();
    let dc: f64 = taps.iter().sum();
    Ok(taps.into_iter().map(|t| t / dc).collect())
}

/// Convolves with a symmetric FIR, compensating its group delay so that the
/// output is aligned with and as long as the input.
fn filter_zero_phase(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let delay = (taps.len() - 1) / 2;
    let n = x.len() as isize;
    (0..x.len())
        .map(|t| {
            let mut acc = 0.0;
            for (j, h) in taps.iter().enumerate() {
                let idx = t as isize + delay as isize - j as isize;
                if idx >= 0 && idx < n {
                    acc += h * x[idx as usize];
                }
            }
            acc
        })
        .collect()
}

/// Band-limits every channel at `cutoff` Hz (3.5 kHz / 7 kHz for the
/// standard anchors).
pub fn lowpass_anchor(buffer: &AudioBuffer, cutoff: f64) -> Result<AudioBuffer> {
    lowpass_anchor_with(buffer, cutoff, &LowpassTemplate::default())
}

pub fn lowpass_anchor_with(
    buffer: &AudioBuffer,
    cutoff: f64,
    template: &LowpassTemplate,
) -> Result<AudioBuffer> {
    let taps = design_lowpass(cutoff, buffer.sample_rate(), template)?;
    let channels = buffer
        .channels()
        .iter()
        .map(|ch| filter_zero_phase(ch, &taps))
        .collect();
    AudioBuffer::new(buffer.sample_rate(), channels)
}

/// Dual-mono downmix: both output channels carry `(L + R) / 2`.
pub fn mono_anchor(stereo: &AudioBuffer) -> Result<AudioBuffer> {
    stereo.expect_channels(2)?;
    let mono: Vec<f64> = stereo
        .channel(0)
        .iter()
        .zip(stereo.channel(1))
        .map(|(l, r)| (l + r) / 2.0)
        .collect();
    AudioBuffer::stereo(stereo.sample_rate(), mono.clone(), mono)
}
