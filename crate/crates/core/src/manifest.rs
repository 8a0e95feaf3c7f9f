//! Rendered-stimulus manifest: one JSON object per line.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::artifacts::{ArtifactKind, Quality, StereoMode};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StimulusKind {
    QN,
    SH,
    /// Unprocessed original.
    REF,
    LP3500,
    LP7000,
    MONO,
}

impl From<ArtifactKind> for StimulusKind {
    fn from(kind: ArtifactKind) -> Self {
        match kind {
            ArtifactKind::QN => StimulusKind::QN,
            ArtifactKind::SH => StimulusKind::SH,
        }
    }
}

impl fmt::Display for StimulusKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub item: String,
    pub kind: StimulusKind,
    pub quality: Option<Quality>,
    /// NMR in dB (QN) or hole probability (SH).
    pub parameter: Option<f64>,
    pub mode: Option<StereoMode>,
    pub seed: Option<u64>,
    pub sha256: String,
    /// File name relative to the manifest's directory.
    pub file: String,
    #[serde(default)]
    pub clipped: usize,
}

impl ManifestRow {
    pub fn matches(
        &self,
        item: &str,
        kind: StimulusKind,
        quality: Option<Quality>,
        mode: Option<StereoMode>,
    ) -> bool {
        self.item == item && self.kind == kind && self.quality == quality && self.mode == mode
    }
}

/// File name of a rendered artifact condition, e.g. `Pop__SH30__MS.wav`.
pub fn artifact_file_name(
    item: &str,
    kind: ArtifactKind,
    quality: Quality,
    mode: StereoMode,
) -> String {
    format!("{item}__{}__{mode}.wav", kind.tag(quality))
}

/// File name of an anchor or the reference, e.g. `Pop__LP3500.wav`.
pub fn anchor_file_name(item: &str, kind: StimulusKind) -> String {
    format!("{item}__{kind}.wav")
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let bytes = fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub rows: Vec<ManifestRow>,
}

impl Manifest {
    pub fn new(rows: Vec<ManifestRow>) -> Self {
        Self { rows }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn find(
        &self,
        item: &str,
        kind: StimulusKind,
        quality: Option<Quality>,
        mode: Option<StereoMode>,
    ) -> Option<&ManifestRow> {
        self.rows
            .iter()
            .find(|r| r.matches(item, kind, quality, mode))
    }

    pub fn has_item(&self, item: &str) -> bool {
        self.rows.iter().any(|r| r.item == item)
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for row in &self.rows {
            out.push_str(&serde_json::to_string(row)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = fs::File::create(path)?;
        file.write_all(self.to_jsonl()?.as_bytes())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let reader = BufReader::new(fs::File::open(path)?);
        let mut rows = Vec::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            rows.push(serde_json::from_str(&line)?);
        }
        Ok(Self { rows })
    }

    /// Rows whose file under `dir` is missing or no longer hashes to the
    /// recorded digest.
    pub fn stale_rows(&self, dir: impl AsRef<Path>) -> Vec<&ManifestRow> {
        let dir = dir.as_ref();
        self.rows
            .iter()
            .filter(|row| {
                sha256_file(dir.join(&row.file))
                    .map(|h| h != row.sha256)
                    .unwrap_or(true)
            })
            .collect()
    }
}

impl TryFrom<&str> for Manifest {
    type Error = Error;

    fn try_from(text: &str) -> Result<Self> {
        let rows = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_follow_convention() {
        assert_eq!(
            artifact_file_name("Pop", ArtifactKind::SH, Quality::Q3, StereoMode::MS),
            "Pop__SH30__MS.wav"
        );
        assert_eq!(
            artifact_file_name("violin", ArtifactKind::QN, Quality::Q1, StereoMode::LR),
            "violin__QN0__LR.wav"
        );
        assert_eq!(
            anchor_file_name("Pop", StimulusKind::LP3500),
            "Pop__LP3500.wav"
        );
    }

    #[test]
    fn jsonl_roundtrip() {
        let row = ManifestRow {
            item: "Pop".into(),
            kind: StimulusKind::SH,
            quality: Some(Quality::Q3),
            parameter: Some(0.3),
            mode: Some(StereoMode::MS),
            seed: Some(42),
            sha256: "ab".into(),
            file: "Pop__SH30__MS.wav".into(),
            clipped: 0,
        };
        let m = Manifest::new(vec![row.clone()]);
        let text = m.to_jsonl().unwrap();
        assert!(text.contains("\"kind\":\"SH\""));
        assert_eq!(Manifest::try_from(text.as_str()).unwrap(), m);
        assert!(m
            .find(
                "Pop",
                StimulusKind::SH,
                Some(Quality::Q3),
                Some(StereoMode::MS)
            )
            .is_some());
        assert!(m
            .find(
                "Pop",
                StimulusKind::SH,
                Some(Quality::Q2),
                Some(StereoMode::MS)
            )
            .is_none());
    }
}
