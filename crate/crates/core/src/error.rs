use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed WAV header in {path}: {reason}")]
    MalformedWav { path: PathBuf, reason: String },
    #[error("unsupported WAV encoding in {path}: {reason}")]
    UnsupportedCodec { path: PathBuf, reason: String },
    #[error("{path}: {channels} channels, at most 2 are supported")]
    TooManyChannels { path: PathBuf, channels: u16 },
    #[error("NaN sample at channel {channel}, frame {frame}")]
    NanSample { channel: usize, frame: usize },
    #[error("empty buffer")]
    EmptyBuffer,
    #[error("expected {expected} channel(s), got {actual}")]
    ChannelCount { expected: usize, actual: usize },
    #[error("channel length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid STFT configuration: {0}")]
    InvalidStft(String),
    #[error("spectrogram geometry mismatch: {0}")]
    Geometry(String),
    #[error("cutoff {cutoff} Hz is not below Nyquist ({nyquist} Hz)")]
    CutoffAboveNyquist { cutoff: f64, nyquist: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("item `{0}` is not present in the manifest")]
    MissingItem(String),
    #[error("manifest has no row for {0}")]
    MissingCondition(String),
    #[error("unknown trial series `{0}`")]
    UnknownSeries(String),
    #[error("plan error: {0}")]
    Plan(String),
    #[error("while rendering {context}: {source}")]
    Render {
        context: String,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
