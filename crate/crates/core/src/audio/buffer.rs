use crate::error::{Error, Result};

/// Canonical sample rate of rendered stimuli.
pub const DATASET_SAMPLE_RATE: u32 = 48_000;

/// Multichannel linear PCM, one `Vec` per channel, nominally in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    sample_rate: u32,
    channels: Vec<Vec<f64>>,
}

impl AudioBuffer {
    pub fn new(sample_rate: u32, channels: Vec<Vec<f64>>) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidParameter(
                "sample rate must be positive".into(),
            ));
        }
        if channels.is_empty() {
            return Err(Error::ChannelCount {
                expected: 1,
                actual: 0,
            });
        }
        let len = channels[0].len();
        if let Some(other) = channels.iter().find(|c| c.len() != len) {
            return Err(Error::LengthMismatch(len, other.len()));
        }
        Ok(Self {
            sample_rate,
            channels,
        })
    }

    pub fn mono(sample_rate: u32, samples: Vec<f64>) -> Result<Self> {
        Self::new(sample_rate, vec![samples])
    }

    pub fn stereo(sample_rate: u32, left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        Self::new(sample_rate, vec![left, right])
    }

    pub fn silence(sample_rate: u32, channels: usize, frames: usize) -> Result<Self> {
        Self::new(sample_rate, vec![vec![0.0; frames]; channels])
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Number of frames (samples per channel).
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channel(&self, index: usize) -> &[f64] {
        &self.channels[index]
    }

    pub fn channel_mut(&mut self, index: usize) -> &mut [f64] {
        &mut self.channels[index]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    /// Splits a stereo buffer into two mono buffers.
    pub fn split_stereo(&self) -> Result<(AudioBuffer, AudioBuffer)> {
        self.expect_channels(2)?;
        Ok((
            AudioBuffer {
                sample_rate: self.sample_rate,
                channels: vec![self.channels[0].clone()],
            },
            AudioBuffer {
                sample_rate: self.sample_rate,
                channels: vec![self.channels[1].clone()],
            },
        ))
    }

    pub fn join_stereo(left: AudioBuffer, right: AudioBuffer) -> Result<AudioBuffer> {
        left.expect_channels(1)?;
        right.expect_channels(1)?;
        if left.sample_rate != right.sample_rate {
            return Err(Error::InvalidParameter(format!(
                "sample rate mismatch: {} vs {}",
                left.sample_rate, right.sample_rate
            )));
        }
        let mut channels = left.channels;
        channels.extend(right.channels);
        AudioBuffer::new(left.sample_rate, channels)
    }

    pub fn expect_channels(&self, expected: usize) -> Result<()> {
        if self.num_channels() != expected {
            return Err(Error::ChannelCount {
                expected,
                actual: self.num_channels(),
            });
        }
        Ok(())
    }

    /// Sum of squared samples over all channels.
    pub fn energy(&self) -> f64 {
        self.channels.iter().flatten().map(|x| x * x).sum()
    }

    pub fn rms(&self) -> f64 {
        let n = self.len() * self.num_channels();
        if n == 0 {
            return 0.0;
        }
        (self.energy() / n as f64).sqrt()
    }

    pub fn peak(&self) -> f64 {
        self.channels
            .iter()
            .flatten()
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn is_silent(&self) -> bool {
        self.channels.iter().flatten().all(|&x| x == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_channels() {
        let err = AudioBuffer::stereo(48_000, vec![0.0; 4], vec![0.0; 3]).unwrap_err();
        assert!(matches!(err, Error::LengthMismatch(4, 3)));
    }

    #[test]
    fn split_and_join_roundtrip() {
        let buf = AudioBuffer::stereo(48_000, vec![0.1, 0.2], vec![-0.3, 0.4]).unwrap();
        let (l, r) = buf.split_stereo().unwrap();
        assert_eq!(AudioBuffer::join_stereo(l, r).unwrap(), buf);
    }

    #[test]
    fn split_rejects_mono() {
        let buf = AudioBuffer::mono(48_000, vec![0.0; 8]).unwrap();
        assert!(matches!(
            buf.split_stereo(),
            Err(Error::ChannelCount {
                expected: 2,
                actual: 1
            })
        ));
    }
}
