//! RIFF/WAVE reading and writing.
//!
//! Integer PCM maps to floats with a symmetric power-of-two divisor
//! (`2^(bits-1)`), so a 16-bit `-32768` reads as exactly `-1.0` and a
//! 24-bit sample reads as `value / 2^23`. On write, `+1.0` saturates to the
//! largest positive code.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use serde::{Deserialize, Serialize};

use super::AudioBuffer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BitDepth {
    #[serde(rename = "16")]
    Int16,
    #[default]
    #[serde(rename = "24")]
    Int24,
    #[serde(rename = "32f")]
    Float32,
}

impl BitDepth {
    fn spec(self) -> (u16, SampleFormat) {
        match self {
            BitDepth::Int16 => (16, SampleFormat::Int),
            BitDepth::Int24 => (24, SampleFormat::Int),
            BitDepth::Float32 => (32, SampleFormat::Float),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WriteReport {
    /// Samples whose magnitude exceeded 1.0 and were saturated.
    pub clipped: usize,
}

fn map_hound_error(path: &Path, err: hound::Error) -> Error {
    match err {
        hound::Error::IoError(e) => Error::Io(e),
        hound::Error::FormatError(reason) => Error::MalformedWav {
            path: path.to_owned(),
            reason: reason.to_owned(),
        },
        hound::Error::Unsupported => Error::UnsupportedCodec {
            path: path.to_owned(),
            reason: "encoding not supported".to_owned(),
        },
        other => Error::MalformedWav {
            path: path.to_owned(),
            reason: other.to_string(),
        },
    }
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let mut reader = WavReader::open(path).map_err(|e| map_hound_error(path, e))?;
    let spec = reader.spec();
    if spec.channels == 0 {
        return Err(Error::MalformedWav {
            path: path.to_owned(),
            reason: "zero channels".into(),
        });
    }
    if spec.channels > 2 {
        return Err(Error::TooManyChannels {
            path: path.to_owned(),
            channels: spec.channels,
        });
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, bits @ (16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<Result<_, _>>()
                .map_err(|e| map_hound_error(path, e))?
        }
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound_error(path, e))?,
        (format, bits) => {
            return Err(Error::UnsupportedCodec {
                path: path.to_owned(),
                reason: format!("{bits}-bit {format:?}"),
            })
        }
    };
    let n_channels = spec.channels as usize;
    let frames = interleaved.len() / n_channels;
    let mut channels = vec![Vec::with_capacity(frames); n_channels];
    for frame in interleaved.chunks_exact(n_channels) {
        for (ch, &v) in channels.iter_mut().zip(frame) {
            ch.push(v);
        }
    }
    AudioBuffer::new(spec.sample_rate, channels)
}

pub fn write_wav(
    buffer: &AudioBuffer,
    path: impl AsRef<Path>,
    depth: BitDepth,
) -> Result<WriteReport> {
    let path = path.as_ref();
    if buffer.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    for (c, ch) in buffer.channels().iter().enumerate() {
        if let Some(frame) = ch.iter().position(|x| x.is_nan()) {
            return Err(Error::NanSample { channel: c, frame });
        }
    }
    let (bits, sample_format) = depth.spec();
    let spec = WavSpec {
        channels: buffer.num_channels() as u16,
        sample_rate: buffer.sample_rate(),
        bits_per_sample: bits,
        sample_format,
    };
    let file = BufWriter::new(File::create(path)?);
    let mut writer = WavWriter::new(file, spec).map_err(|e| map_hound_error(path, e))?;
    let mut report = WriteReport::default();
    for i in 0..buffer.len() {
        for ch in buffer.channels() {
            let x = ch[i];
            if x.abs() > 1.0 {
                report.clipped += 1;
            }
            let x = x.clamp(-1.0, 1.0);
            let written = match depth {
                BitDepth::Float32 => writer.write_sample(x as f32),
                BitDepth::Int16 | BitDepth::Int24 => {
                    let full = (1i64 << (bits - 1)) as f64;
                    let code = (x * full).round().clamp(-full, full - 1.0) as i32;
                    writer.write_sample(code)
                }
            };
            written.map_err(|e| map_hound_error(path, e))?;
        }
    }
    writer.finalize().map_err(|e| map_hound_error(path, e))?;
    Ok(report)
}
