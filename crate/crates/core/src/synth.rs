//! Deterministic synthetic test items standing in for real recordings.
//!
//! Each generator returns a stereo buffer whose spatial character matches
//! one of the item classes of the experiment: centered solo instruments,
//! wide mixes, and hard-panned mixes.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    Tonal,
    Noisy,
    Transient,
    Glock,
    WideMix,
    HardPanned,
}

pub fn generate(kind: SynthKind, seconds: f64, sample_rate: u32, seed: u64) -> AudioBuffer {
    match kind {
        SynthKind::Tonal => tonal(seconds, sample_rate, seed),
        SynthKind::Noisy => noisy(seconds, sample_rate, seed),
        SynthKind::Transient => transient(seconds, sample_rate, seed),
        SynthKind::Glock => glock(seconds, sample_rate, seed),
        SynthKind::WideMix => wide_mix(seconds, sample_rate, seed),
        SynthKind::HardPanned => hard_panned(seconds, sample_rate, seed),
    }
}

fn frames(seconds: f64, sample_rate: u32) -> usize {
    (seconds * sample_rate as f64).round() as usize
}

/// Bowed-string-like melody: harmonic partials with vibrato, note changes
/// every half second, soft attacks.
fn melody(len: usize, sr: f64, rng: &mut ChaCha8Rng, base: f64) -> Vec<f64> {
    let scale = [0.0, 2.0, 4.0, 5.0, 7.0, 9.0, 11.0, 12.0];
    let note_len = (0.5 * sr) as usize;
    let notes: Vec<f64> = (0..=len / note_len.max(1))
        .map(|_| base * 2f64.powf(scale[rng.random_range(0..scale.len())] / 12.0))
        .collect();
    let mut phase = 0.0;
    (0..len)
        .map(|t| {
            let n = t / note_len;
            let pos = (t % note_len) as f64 / sr;
            let f0 = notes[n] * (1.0 + 0.004 * (2.0 * PI * 5.5 * t as f64 / sr).sin());
            phase += 2.0 * PI * f0 / sr;
            let env = (pos / 0.05).min(1.0) * (1.0 - 0.3 * pos);
            let tone: f64 = (1..=8).map(|h| (h as f64 * phase).sin() / h as f64).sum();
            0.12 * env * tone
        })
        .collect()
}

/// One-pole lowpassed Gaussian noise.
fn colored_noise(len: usize, rng: &mut ChaCha8Rng, coeff: f64) -> Vec<f64> {
    let mut state = 0.0;
    (0..len)
        .map(|_| {
            let w: f64 = rng.sample(StandardNormal);
            state = coeff * state + (1.0 - coeff) * w;
            state
        })
        .collect()
}

fn normalise(x: &mut [f64], peak: f64) {
    let m = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m > 0.0 {
        x.iter_mut().for_each(|v| *v *= peak / m);
    }
}

/// Centered solo melody.
pub fn tonal(seconds: f64, sample_rate: u32, seed: u64) -> AudioBuffer {
    let len = frames(seconds, sample_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = melody(len, sample_rate as f64, &mut rng, 392.0);
    normalise(&mut x, 0.3);
    let right: Vec<f64> = x.iter().map(|v| 0.95 * v).collect();
    AudioBuffer::stereo(sample_rate, x, right).expect("equal lengths")
}

/// Slowly modulated broadband noise, partly correlated between channels.
pub fn noisy(seconds: f64, sample_rate: u32, seed: u64) -> AudioBuffer {
    let len = frames(seconds, sample_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let common = colored_noise(len, &mut rng, 0.6);
    let l_only = colored_noise(len, &mut rng, 0.3);
    let r_only = colored_noise(len, &mut rng, 0.3);
    let sr = sample_rate as f64;
    let env = |t: usize| 0.6 + 0.4 * (2.0 * PI * 1.3 * t as f64 / sr).sin();
    let mut l: Vec<f64> = (0..len)
        .map(|t| env(t) * (common[t] + 0.5 * l_only[t]))
        .collect();
    let mut r: Vec<f64> = (0..len)
        .map(|t| env(t) * (common[t] + 0.5 * r_only[t]))
        .collect();
    normalise(&mut l, 0.3);
    normalise(&mut r, 0.3);
    AudioBuffer::stereo(sample_rate, l, r).expect("equal lengths")
}

/// Sharp decaying noise bursts every 250 ms over near-silence.
pub fn transient(seconds: f64, sample_rate: u32, seed: u64) -> AudioBuffer {
    let len = frames(seconds, sample_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let period = (0.25 * sample_rate as f64) as usize;
    let decay = (-1.0 / (0.015 * sample_rate as f64)).exp();
    let mut env = 0.0;
    let mut x: Vec<f64> = (0..len)
        .map(|t| {
            if t % period == 0 {
                env = 1.0;
            }
            env *= decay;
            let w: f64 = rng.sample(StandardNormal);
            env * w + 1e-4 * rng.sample::<f64, _>(StandardNormal)
        })
        .collect();
    normalise(&mut x, 0.4);
    AudioBuffer::stereo(sample_rate, x.clone(), x).expect("equal lengths")
}

/// Struck bars: inharmonic partials with exponential decay.
pub fn glock(seconds: f64, sample_rate: u32, seed: u64) -> AudioBuffer {
    let len = frames(seconds, sample_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sr = sample_rate as f64;
    let period = (0.4 * sr) as usize;
    let mut x = vec![0.0; len];
    for start in (0..len).step_by(period.max(1)) {
        let f0 = 784.0 * 2f64.powf(rng.random_range(0..12) as f64 / 12.0);
        for (i, v) in x[start..].iter_mut().enumerate() {
            let t = i as f64 / sr;
            let env = (-t / 0.6).exp();
            *v += env
                * ((2.0 * PI * f0 * t).sin()
                    + 0.4 * (2.0 * PI * 2.76 * f0 * t).sin()
                    + 0.2 * (2.0 * PI * 5.4 * f0 * t).sin());
        }
    }
    normalise(&mut x, 0.3);
    let right: Vec<f64> = x.iter().map(|v| 0.9 * v).collect();
    AudioBuffer::stereo(sample_rate, x, right).expect("equal lengths")
}

/// Several sources at different pan positions plus decorrelated ambience.
pub fn wide_mix(seconds: f64, sample_rate: u32, seed: u64) -> AudioBuffer {
    let len = frames(seconds, sample_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sr = sample_rate as f64;
    let lead = melody(len, sr, &mut rng, 330.0);
    let bass = melody(len, sr, &mut rng, 82.0);
    let hats = transient(seconds, sample_rate, seed ^ 0x5a5a)
        .channel(0)
        .to_vec();
    let amb_l = colored_noise(len, &mut rng, 0.9);
    let amb_r = colored_noise(len, &mut rng, 0.9);
    let pan = |p: f64| ((1.0 - p) * PI / 4.0).cos().max(0.0);
    let mut l: Vec<f64> = (0..len)
        .map(|t| pan(-0.2) * lead[t] + 0.7 * bass[t] + pan(0.6) * 0.2 * hats[t] + 0.05 * amb_l[t])
        .collect();
    let mut r: Vec<f64> = (0..len)
        .map(|t| pan(0.2) * lead[t] + 0.7 * bass[t] + pan(-0.6) * 0.2 * hats[t] + 0.05 * amb_r[t])
        .collect();
    let peak = l.iter().chain(&r).fold(0.0f64, |a, v| a.max(v.abs()));
    l.iter_mut()
        .chain(r.iter_mut())
        .for_each(|v| *v *= 0.3 / peak);
    AudioBuffer::stereo(sample_rate, l, r).expect("equal lengths")
}

/// Speech-like syllabic tone fully in the left channel, ambient music fully
/// in the right.
pub fn hard_panned(seconds: f64, sample_rate: u32, seed: u64) -> AudioBuffer {
    let len = frames(seconds, sample_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sr = sample_rate as f64;
    let f0 = if seed % 2 == 0 { 120.0 } else { 210.0 };
    let mut phase = 0.0;
    let mut voice: Vec<f64> = (0..len)
        .map(|t| {
            let s = t as f64 / sr;
            phase += 2.0 * PI * f0 * (1.0 + 0.05 * (2.0 * PI * 0.7 * s).sin()) / sr;
            let syllable = (0.5 - 0.5 * (2.0 * PI * 4.0 * s).cos()).powi(2);
            let formants: f64 = (1..=20)
                .map(|h| {
                    let f = h as f64 * f0;
                    let weight = (-((f - 700.0) / 400.0).powi(2)).exp()
                        + 0.5 * (-((f - 1800.0) / 500.0).powi(2)).exp();
                    weight * (h as f64 * phase).sin()
                })
                .sum();
            syllable * formants
        })
        .collect();
    let mut music = melody(len, sr, &mut rng, 262.0);
    let pad = colored_noise(len, &mut rng, 0.95);
    music.iter_mut().zip(&pad).for_each(|(m, p)| *m += 0.3 * p);
    normalise(&mut voice, 0.3);
    normalise(&mut music, 0.2);
    AudioBuffer::stereo(sample_rate, voice, music).expect("equal lengths")
}
