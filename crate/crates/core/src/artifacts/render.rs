use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::{process_stereo, EngineConfig};
use super::spec::{derive_seed, ArtifactKind, ArtifactSpec, Quality, StereoMode};
use crate::audio::{lowpass_anchor, mono_anchor, write_wav, AudioBuffer, BitDepth};
use crate::error::{Error, Result};
use crate::manifest::{
    anchor_file_name, artifact_file_name, sha256_file, ManifestRow, StimulusKind,
};

/// Which conditions to render for one item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderRequest {
    pub kinds: BTreeSet<ArtifactKind>,
    pub modes: BTreeSet<StereoMode>,
    pub qualities: BTreeSet<Quality>,
    /// Also write the reference, both lowpass anchors and the mono anchor.
    pub anchors: bool,
    pub bit_depth: BitDepth,
}

impl RenderRequest {
    pub fn full(kinds: impl IntoIterator<Item = ArtifactKind>) -> Self {
        Self {
            kinds: kinds.into_iter().collect(),
            modes: StereoMode::ALL.into_iter().collect(),
            qualities: Quality::ALL.into_iter().collect(),
            anchors: true,
            bit_depth: BitDepth::Int24,
        }
    }
}

enum Job {
    Artifact(ArtifactKind, Quality, StereoMode),
    Anchor(StimulusKind),
}

/// Renders every requested condition of `item` into `out_dir` and returns
/// the manifest rows in a fixed order: artifacts by kind, quality, mode,
/// then anchors. Each condition's seed is derived from the master seed
/// and the condition identity, so results do not depend on scheduling.
pub fn render_condition_set(
    item_name: &str,
    item: &AudioBuffer,
    request: &RenderRequest,
    seed: u64,
    out_dir: &Path,
    config: &EngineConfig,
) -> Result<Vec<ManifestRow>> {
    item.expect_channels(2)?;
    let mut jobs = Vec::new();
    for &kind in &request.kinds {
        for &quality in &request.qualities {
            for &mode in &request.modes {
                jobs.push(Job::Artifact(kind, quality, mode));
            }
        }
    }
    let has_conditions = !jobs.is_empty();
    if request.anchors && has_conditions {
        for kind in [
            StimulusKind::REF,
            StimulusKind::LP3500,
            StimulusKind::LP7000,
            StimulusKind::MONO,
        ] {
            jobs.push(Job::Anchor(kind));
        }
    }
    jobs.par_iter()
        .map(|job| {
            let (audio, mut row) = match *job {
                Job::Artifact(kind, quality, mode) => {
                    let condition_seed =
                        derive_seed(seed, &format!("{item_name}/{kind}/{quality}/{mode}"));
                    let spec = ArtifactSpec::new(kind, quality, condition_seed);
                    let file = artifact_file_name(item_name, kind, quality, mode);
                    let audio =
                        process_stereo(item, &spec, mode, config).map_err(|e| wrap(&file, e))?;
                    let row = ManifestRow {
                        item: item_name.to_owned(),
                        kind: kind.into(),
                        quality: Some(quality),
                        parameter: Some(spec.parameter()),
                        mode: Some(mode),
                        seed: Some(condition_seed),
                        sha256: String::new(),
                        file: file.clone(),
                        clipped: 0,
                    };
                    (audio, row)
                }
                Job::Anchor(kind) => {
                    let file = anchor_file_name(item_name, kind);
                    let audio = match kind {
                        StimulusKind::LP3500 => lowpass_anchor(item, 3500.0),
                        StimulusKind::LP7000 => lowpass_anchor(item, 7000.0),
                        StimulusKind::MONO => mono_anchor(item),
                        _ => Ok(item.clone()),
                    }
                    .map_err(|e| wrap(&file, e))?;
                    let row = ManifestRow {
                        item: item_name.to_owned(),
                        kind,
                        quality: None,
                        parameter: None,
                        mode: None,
                        seed: None,
                        sha256: String::new(),
                        file: file.clone(),
                        clipped: 0,
                    };
                    (audio, row)
                }
            };
            let file = row.file.clone();
            let path = out_dir.join(&file);
            let report = write_wav(&audio, &path, request.bit_depth).map_err(|e| wrap(&file, e))?;
            if report.clipped > 0 {
                log::warn!("{file}: {} samples clipped", report.clipped);
            }
            row.clipped = report.clipped;
            row.sha256 = sha256_file(&path).map_err(|e| wrap(&file, e))?;
            Ok(row)
        })
        .collect()
}

fn wrap(context: &str, source: Error) -> Error {
    Error::Render {
        context: context.to_owned(),
        source: Box::new(source),
    }
}
