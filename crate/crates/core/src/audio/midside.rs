use std::f64::consts::FRAC_1_SQRT_2;

use super::AudioBuffer;
use crate::error::{Error, Result};

/// Default matrix gain; energy preserving.
pub const DEFAULT_MS_GAIN: f64 = FRAC_1_SQRT_2;

/// Mid and side signals together with the gain used to form them.
#[derive(Debug, Clone, PartialEq)]
pub struct MidSidePair {
    pub mid: AudioBuffer,
    pub side: AudioBuffer,
    pub gain: f64,
}

/// `mid = (L + R) g`, `side = (L - R) g`.
pub fn ms_forward(stereo: &AudioBuffer, gain: f64) -> Result<MidSidePair> {
    stereo.expect_channels(2)?;
    if !(gain.is_finite() && gain > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mid/side gain {gain} must be positive"
        )));
    }
    let (l, r) = (stereo.channel(0), stereo.channel(1));
    let mid = l.iter().zip(r).map(|(a, b)| (a + b) * gain).collect();
    let side = l.iter().zip(r).map(|(a, b)| (a - b) * gain).collect();
    Ok(MidSidePair {
        mid: AudioBuffer::mono(stereo.sample_rate(), mid)?,
        side: AudioBuffer::mono(stereo.sample_rate(), side)?,
        gain,
    })
}

/// `L = (M + S) / 2g`, `R = (M - S) / 2g`.
pub fn ms_inverse(pair: &MidSidePair) -> Result<AudioBuffer> {
    pair.mid.expect_channels(1)?;
    pair.side.expect_channels(1)?;
    if pair.mid.len() != pair.side.len() {
        return Err(Error::LengthMismatch(pair.mid.len(), pair.side.len()));
    }
    if pair.mid.sample_rate() != pair.side.sample_rate() {
        return Err(Error::InvalidParameter(
            "mid and side sample rates differ".into(),
        ));
    }
    let scale = 1.0 / (2.0 * pair.gain);
    let (m, s) = (pair.mid.channel(0), pair.side.channel(0));
    let left = m.iter().zip(s).map(|(a, b)| (a + b) * scale).collect();
    let right = m.iter().zip(s).map(|(a, b)| (a - b) * scale).collect();
    AudioBuffer::stereo(pair.mid.sample_rate(), left, right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_stereo(frames: usize, seed: u64) -> AudioBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = (0..frames).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let r = (0..frames).map(|_| rng.random_range(-1.0..=1.0)).collect();
        AudioBuffer::stereo(48_000, l, r).unwrap()
    }

    #[test]
    fn dual_mono_has_silent_side() {
        let x: Vec<f64> = (0..100).map(|i| (i as f64 * 0.1).sin()).collect();
        let pair = ms_forward(
            &AudioBuffer::stereo(48_000, x.clone(), x).unwrap(),
            DEFAULT_MS_GAIN,
        )
        .unwrap();
        assert!(pair.side.is_silent());
    }

    #[test]
    fn antiphase_has_silent_mid() {
        let x: Vec<f64> = (0..100).map(|i| (i as f64 * 0.1).sin()).collect();
        let neg = x.iter().map(|v| -v).collect();
        let pair = ms_forward(
            &AudioBuffer::stereo(48_000, x, neg).unwrap(),
            DEFAULT_MS_GAIN,
        )
        .unwrap();
        assert!(pair.mid.is_silent());
    }

    #[test]
    fn energy_preserved_at_default_gain() {
        let x = random_stereo(5000, 1);
        let pair = ms_forward(&x, DEFAULT_MS_GAIN).unwrap();
        let lr = x.energy();
        let ms = pair.mid.energy() + pair.side.energy();
        assert!((lr - ms).abs() / lr < 1e-9);
    }

    #[test]
    fn zero_side_inverts_to_dual_mono() {
        let mid = AudioBuffer::mono(48_000, vec![0.5, -0.25, 0.125]).unwrap();
        let side = AudioBuffer::silence(48_000, 1, 3).unwrap();
        let out = ms_inverse(&MidSidePair {
            mid,
            side,
            gain: DEFAULT_MS_GAIN,
        })
        .unwrap();
        assert_eq!(out.channel(0), out.channel(1));
    }

    #[test]
    fn zero_mid_inverts_to_antiphase() {
        let side = AudioBuffer::mono(48_000, vec![0.5, -0.25, 0.125]).unwrap();
        let mid = AudioBuffer::silence(48_000, 1, 3).unwrap();
        let out = ms_inverse(&MidSidePair {
            mid,
            side,
            gain: DEFAULT_MS_GAIN,
        })
        .unwrap();
        for (l, r) in out.channel(0).iter().zip(out.channel(1)) {
            assert_eq!(*l, -*r);
        }
    }

    #[test]
    fn mono_input_rejected() {
        let x = AudioBuffer::mono(48_000, vec![0.0; 4]).unwrap();
        assert!(matches!(
            ms_forward(&x, DEFAULT_MS_GAIN),
            Err(Error::ChannelCount { .. })
        ));
    }

    #[test]
    fn length_mismatch_rejected() {
        let pair = MidSidePair {
            mid: AudioBuffer::mono(48_000, vec![0.0; 4]).unwrap(),
            side: AudioBuffer::mono(48_000, vec![0.0; 5]).unwrap(),
            gain: DEFAULT_MS_GAIN,
        };
        assert!(matches!(
            ms_inverse(&pair),
            Err(Error::LengthMismatch(4, 5))
        ));
    }

    proptest! {
        #[test]
        fn roundtrip_within_1e9(seed in any::<u64>(), gain in 0.25f64..2.0) {
            let x = random_stereo(512, seed);
            let y = ms_inverse(&ms_forward(&x, gain).unwrap()).unwrap();
            let max_err = x.channels().iter().flatten().zip(y.channels().iter().flatten())
                .map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(max_err < 1e-9);
        }
    }
}
