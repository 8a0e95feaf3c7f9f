//! Monaural QN/SH generators and the LR/MS stereo chains around them.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::spec::{derive_seed, ArtifactKind, ArtifactSpec, StereoMode};
use crate::audio::{
    istft_samples, ms_forward, ms_inverse, stft_samples, AudioBuffer, MidSidePair, Spectrogram,
    StftConfig, DEFAULT_MS_GAIN,
};
use crate::error::{Error, Result};
use crate::psycho::{
    band_energies, masking_threshold, nmr_from_energies, CriticalBandPartition, MaskingModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub stft: StftConfig,
    pub masking: MaskingModel,
    /// Mid/side matrix gain.
    pub ms_gain: f64,
    /// Re-analysis passes that pull the synthesised QN noise back onto its
    /// per-band targets after overlap-add.
    pub qn_refine_passes: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            stft: StftConfig::default(),
            masking: MaskingModel::default(),
            ms_gain: DEFAULT_MS_GAIN,
            qn_refine_passes: 3,
        }
    }
}

fn mono_samples(channel: &AudioBuffer) -> Result<&[f64]> {
    channel.expect_channels(1)?;
    if channel.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    Ok(channel.channel(0))
}

/// Scales each band of each frame of `spec` by `gains[frame][band]`.
fn apply_band_gains(spec: &mut Spectrogram, partition: &CriticalBandPartition, gains: &[Vec<f64>]) {
    for (frame, g) in spec.frames.iter_mut().zip(gains) {
        for (b, &gain) in g.iter().enumerate() {
            for bin in &mut frame[partition.bins(b)] {
                *bin *= gain;
            }
        }
    }
}

fn gains_towards(target: &[Vec<f64>], actual: &[Vec<f64>]) -> Vec<Vec<f64>> {
    target
        .iter()
        .zip(actual)
        .map(|(t, a)| {
            t.iter()
                .zip(a)
                .map(|(&t, &a)| if a > 0.0 { (t / a).sqrt() } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Adds noise whose energy in every band of every active frame sits at the
/// masked threshold plus `nmr_db`.
///
/// Frames below the activity gate receive no noise. The result is trimmed
/// so that the gated mean NMR measured against the input equals `nmr_db`.
pub fn apply_qn_mono(
    channel: &AudioBuffer,
    nmr_db: f64,
    seed: u64,
    config: &EngineConfig,
) -> Result<AudioBuffer> {
    let x = mono_samples(channel)?;
    if !nmr_db.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "NMR {nmr_db} dB is not finite"
        )));
    }
    let sr = channel.sample_rate();
    let partition = CriticalBandPartition::new(config.stft.fft_size, sr);
    let reference = stft_samples(x, sr, config.stft)?;
    let threshold = masking_threshold(&reference, &partition, &config.masking)?;
    let scale = 10f64.powf(nmr_db / 10.0);
    let target: Vec<Vec<f64>> = threshold
        .thresholds
        .iter()
        .zip(&threshold.band_energy)
        .map(|(t, e)| {
            let active = config.masking.frame_is_active(e);
            t.iter()
                .map(|&t| if active { t * scale } else { 0.0 })
                .collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise = Spectrogram::zeros(config.stft, sr, x.len());
    for frame in &mut noise.frames {
        for bin in frame.iter_mut() {
            *bin = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
    }
    let drawn = band_energies(&noise, &partition)?;
    apply_band_gains(&mut noise, &partition, &gains_towards(&target, &drawn));

    let mut samples = istft_samples(&noise)?;
    for _ in 0..config.qn_refine_passes {
        let mut reanalysed = stft_samples(&samples, sr, config.stft)?;
        let actual = band_energies(&reanalysed, &partition)?;
        apply_band_gains(
            &mut reanalysed,
            &partition,
            &gains_towards(&target, &actual),
        );
        samples = istft_samples(&reanalysed)?;
    }

    let measured = band_energies(&stft_samples(&samples, sr, config.stft)?, &partition)?;
    if let Some(mean) = nmr_from_energies(&threshold, &measured, &config.masking).mean_db() {
        let trim = 10f64.powf((nmr_db - mean) / 20.0);
        samples.iter_mut().for_each(|v| *v *= trim);
    }
    let out = x.iter().zip(&samples).map(|(a, n)| a + n).collect();
    AudioBuffer::mono(sr, out)
}

/// Spectral-hole output together with the realised hole count.
#[derive(Debug, Clone, PartialEq)]
pub struct HoleOutcome {
    pub buffer: AudioBuffer,
    /// Band-frame cells that were zeroed.
    pub holes: usize,
    /// Band-frame cells considered.
    pub cells: usize,
}

impl HoleOutcome {
    pub fn hole_fraction(&self) -> f64 {
        if self.cells == 0 {
            0.0
        } else {
            self.holes as f64 / self.cells as f64
        }
    }
}

/// Zeroes whole critical bands of STFT frames, each band-frame cell
/// independently with probability `hole_prob`.
pub fn apply_sh_mono(
    channel: &AudioBuffer,
    hole_prob: f64,
    seed: u64,
    config: &EngineConfig,
) -> Result<HoleOutcome> {
    let x = mono_samples(channel)?;
    if !(0.0..=1.0).contains(&hole_prob) {
        return Err(Error::InvalidParameter(format!(
            "hole probability {hole_prob} outside [0, 1]"
        )));
    }
    let sr = channel.sample_rate();
    let partition = CriticalBandPartition::new(config.stft.fft_size, sr);
    let mut spec = stft_samples(x, sr, config.stft)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut holes = 0;
    for frame in &mut spec.frames {
        for b in 0..partition.num_bands() {
            if rng.random::<f64>() < hole_prob {
                holes += 1;
                frame[partition.bins(b)].fill(Complex64::new(0.0, 0.0));
            }
        }
    }
    let cells = spec.num_frames() * partition.num_bands();
    Ok(HoleOutcome {
        buffer: AudioBuffer::mono(sr, istft_samples(&spec)?)?,
        holes,
        cells,
    })
}

/// Applies the monaural artifact of `spec` to one branch signal.
pub fn apply_mono(
    channel: &AudioBuffer,
    spec: &ArtifactSpec,
    seed: u64,
    config: &EngineConfig,
) -> Result<AudioBuffer> {
    match spec.kind {
        ArtifactKind::QN => apply_qn_mono(channel, spec.parameter(), seed, config),
        ArtifactKind::SH => Ok(apply_sh_mono(channel, spec.parameter(), seed, config)?.buffer),
    }
}

/// Runs the artifact through the LR or MS chain. Each branch gets its own
/// sub-seed derived from the spec seed and the branch name.
pub fn process_stereo(
    stereo: &AudioBuffer,
    spec: &ArtifactSpec,
    mode: StereoMode,
    config: &EngineConfig,
) -> Result<AudioBuffer> {
    stereo.expect_channels(2)?;
    match mode {
        StereoMode::LR => {
            let (left, right) = stereo.split_stereo()?;
            let left = apply_mono(&left, spec, derive_seed(spec.seed, "L"), config)?;
            let right = apply_mono(&right, spec, derive_seed(spec.seed, "R"), config)?;
            AudioBuffer::join_stereo(left, right)
        }
        StereoMode::MS => {
            let pair = ms_forward(stereo, config.ms_gain)?;
            let mid = apply_mono(&pair.mid, spec, derive_seed(spec.seed, "M"), config)?;
            let side = apply_mono(&pair.side, spec, derive_seed(spec.seed, "S"), config)?;
            ms_inverse(&MidSidePair {
                mid,
                side,
                gain: pair.gain,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::stft;
    use crate::psycho::measure_nmr;
    use crate::synth;

    fn measured_nmr(reference: &AudioBuffer, degraded: &AudioBuffer, channel: usize) -> f64 {
        let config = EngineConfig::default();
        let p = CriticalBandPartition::new(config.stft.fft_size, reference.sample_rate());
        let r = &stft(reference, config.stft).unwrap()[channel];
        let d = &stft(degraded, config.stft).unwrap()[channel];
        measure_nmr(r, d, &p, &config.masking)
            .unwrap()
            .mean_db()
            .unwrap()
    }

    fn mono(buf: &AudioBuffer, ch: usize) -> AudioBuffer {
        AudioBuffer::mono(buf.sample_rate(), buf.channel(ch).to_vec()).unwrap()
    }

    #[test]
    fn qn_hits_target_on_tonal_item() {
        let item = mono(&synth::tonal(2.0, 48_000, 1), 0);
        let out = apply_qn_mono(&item, 24.0, 7, &EngineConfig::default()).unwrap();
        let nmr = measured_nmr(&item, &out, 0);
        assert!((23.0..=25.0).contains(&nmr), "{nmr}");
    }

    #[test]
    fn qn_on_silence_stays_silent() {
        let item = AudioBuffer::silence(48_000, 1, 20_000).unwrap();
        let out = apply_qn_mono(&item, 24.0, 7, &EngineConfig::default()).unwrap();
        assert!(out.peak() < 10f64.powf(-90.0 / 20.0));
    }

    #[test]
    fn qn_seed_reproducible_and_distinct() {
        let item = mono(&synth::noisy(1.0, 48_000, 2), 0);
        let config = EngineConfig::default();
        let a = apply_qn_mono(&item, 12.0, 1, &config).unwrap();
        let b = apply_qn_mono(&item, 12.0, 1, &config).unwrap();
        let c = apply_qn_mono(&item, 12.0, 2, &config).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let (na, nc) = (measured_nmr(&item, &a, 0), measured_nmr(&item, &c, 0));
        assert!((na - nc).abs() <= 1.0);
    }

    #[test]
    fn qn_noise_energy_grows_with_nmr() {
        let item = mono(&synth::noisy(1.0, 48_000, 3), 0);
        let config = EngineConfig::default();
        let energies: Vec<f64> = [0.0, 6.0, 12.0, 18.0, 24.0]
            .iter()
            .map(|&nmr| {
                let out = apply_qn_mono(&item, nmr, 5, &config).unwrap();
                out.channel(0)
                    .iter()
                    .zip(item.channel(0))
                    .map(|(o, i)| (o - i).powi(2))
                    .sum::<f64>()
            })
            .collect();
        assert!(energies.windows(2).all(|w| w[1] > w[0]), "{energies:?}");
    }

    #[test]
    fn qn_rejects_bad_input() {
        let stereo = AudioBuffer::silence(48_000, 2, 100).unwrap();
        assert!(apply_qn_mono(&stereo, 0.0, 0, &EngineConfig::default()).is_err());
        let m = AudioBuffer::silence(48_000, 1, 100).unwrap();
        assert!(apply_qn_mono(&m, f64::NAN, 0, &EngineConfig::default()).is_err());
        let empty = AudioBuffer::mono(48_000, vec![]).unwrap();
        assert!(matches!(
            apply_qn_mono(&empty, 0.0, 0, &EngineConfig::default()),
            Err(Error::EmptyBuffer)
        ));
    }

    #[test]
    fn sh_zero_probability_is_transform_identity() {
        let item = mono(&synth::transient(1.0, 48_000, 4), 0);
        let out = apply_sh_mono(&item, 0.0, 1, &EngineConfig::default()).unwrap();
        assert_eq!(out.holes, 0);
        let err: f64 = out
            .buffer
            .channel(0)
            .iter()
            .zip(item.channel(0))
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        assert!((err / item.energy()).sqrt() < 1e-7);
    }

    #[test]
    fn sh_unit_probability_is_silence() {
        let item = mono(&synth::tonal(0.5, 48_000, 4), 0);
        let out = apply_sh_mono(&item, 1.0, 1, &EngineConfig::default()).unwrap();
        assert_eq!(out.holes, out.cells);
        assert!(out.buffer.is_silent());
    }

    #[test]
    fn sh_rate_at_q1() {
        let item = mono(&synth::noisy(10.0, 48_000, 5), 0);
        let out = apply_sh_mono(&item, 0.70, 11, &EngineConfig::default()).unwrap();
        assert!(out.cells >= 10_000);
        assert!(
            (0.68..=0.72).contains(&out.hole_fraction()),
            "{}",
            out.hole_fraction()
        );
    }

    #[test]
    fn sh_probability_validated() {
        let m = AudioBuffer::silence(48_000, 1, 100).unwrap();
        assert!(apply_sh_mono(&m, 1.5, 0, &EngineConfig::default()).is_err());
        assert!(apply_sh_mono(&m, -0.1, 0, &EngineConfig::default()).is_err());
    }

    fn dual_mono(seconds: f64) -> AudioBuffer {
        let x = synth::tonal(seconds, 48_000, 6).channel(0).to_vec();
        AudioBuffer::stereo(48_000, x.clone(), x).unwrap()
    }

    #[test]
    fn ms_chain_keeps_dual_mono() {
        let item = dual_mono(1.0);
        let config = EngineConfig::default();
        for kind in ArtifactKind::ALL {
            let spec = ArtifactSpec::new(kind, crate::artifacts::Quality::Q2, 9);
            let out = process_stereo(&item, &spec, StereoMode::MS, &config).unwrap();
            assert_eq!(out.channel(0), out.channel(1), "{kind}");
        }
    }

    #[test]
    fn lr_chain_decorrelates_dual_mono_holes() {
        let item = dual_mono(1.0);
        let spec = ArtifactSpec::new(ArtifactKind::SH, crate::artifacts::Quality::Q2, 9);
        let out = process_stereo(&item, &spec, StereoMode::LR, &EngineConfig::default()).unwrap();
        let diff: f64 = out
            .channel(0)
            .iter()
            .zip(out.channel(1))
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        assert!(diff > 1e-3 * out.energy());
    }

    #[test]
    fn lr_qn_hits_target_per_channel() {
        let item = synth::wide_mix(2.0, 48_000, 7);
        let spec = ArtifactSpec::new(ArtifactKind::QN, crate::artifacts::Quality::Q5, 3);
        let out = process_stereo(&item, &spec, StereoMode::LR, &EngineConfig::default()).unwrap();
        for ch in 0..2 {
            let nmr = measured_nmr(&item, &out, ch);
            assert!((23.0..=25.0).contains(&nmr), "channel {ch}: {nmr}");
        }
    }

    #[test]
    fn stereo_chain_rejects_mono_and_keeps_length() {
        let spec = ArtifactSpec::new(ArtifactKind::SH, crate::artifacts::Quality::Q3, 1);
        let m = AudioBuffer::silence(48_000, 1, 100).unwrap();
        assert!(process_stereo(&m, &spec, StereoMode::LR, &EngineConfig::default()).is_err());
        let s = synth::wide_mix(0.3, 48_000, 1);
        for mode in StereoMode::ALL {
            assert_eq!(
                process_stereo(&s, &spec, mode, &EngineConfig::default())
                    .unwrap()
                    .len(),
                s.len()
            );
        }
    }
}
