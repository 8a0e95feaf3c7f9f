#![allow(dead_code)]

use std::collections::BTreeMap;

use stereoqual_core::artifacts::{ArtifactKind, Quality, StereoMode};
use stereoqual_core::manifest::{
    anchor_file_name, artifact_file_name, Manifest, ManifestRow, StimulusKind,
};
use stereoqual_core::planner::{design_experiment, PlanConfig, Series, TrialPlan};
use stereoqual_session::{Rating, TrialView};

fn row(
    item: &str,
    kind: StimulusKind,
    quality: Option<Quality>,
    mode: Option<StereoMode>,
    file: String,
) -> ManifestRow {
    ManifestRow {
        item: item.into(),
        kind,
        quality,
        parameter: None,
        mode,
        seed: None,
        sha256: format!("h-{file}"),
        file,
        clipped: 0,
    }
}

pub fn manifest(items: &[&str]) -> Manifest {
    let mut rows = Vec::new();
    for &item in items {
        for kind in ArtifactKind::ALL {
            for q in Quality::ALL {
                for m in StereoMode::ALL {
                    rows.push(row(
                        item,
                        kind.into(),
                        Some(q),
                        Some(m),
                        artifact_file_name(item, kind, q, m),
                    ));
                }
            }
        }
        for kind in [
            StimulusKind::REF,
            StimulusKind::LP3500,
            StimulusKind::LP7000,
            StimulusKind::MONO,
        ] {
            rows.push(row(item, kind, None, None, anchor_file_name(item, kind)));
        }
    }
    Manifest::new(rows)
}

/// Mixed series only: 3 SHmix + 3 QNmix trials after 2 training trials.
pub fn small_plan() -> TrialPlan {
    let config = PlanConfig {
        items: BTreeMap::from([
            (
                ArtifactKind::SH,
                vec!["glock".into(), "Pop".into(), "panDialogM".into()],
            ),
            (
                ArtifactKind::QN,
                vec!["violin".into(), "RnB".into(), "panDialogF".into()],
            ),
        ]),
        series: vec![Series::SHmix, Series::QNmix],
        ..PlanConfig::default()
    };
    let m = manifest(&[
        "glock",
        "Pop",
        "panDialogM",
        "violin",
        "RnB",
        "panDialogF",
        "training1",
        "training2",
    ]);
    design_experiment(&m, &config).unwrap()
}

pub fn rate_all(view: &TrialView, score: i64) -> Vec<Rating> {
    view.stimuli
        .iter()
        .map(|s| Rating {
            stimulus_id: s.id.clone(),
            score,
        })
        .collect()
}
