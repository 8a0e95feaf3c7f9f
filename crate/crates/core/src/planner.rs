//! MUSHRA experiment design: trial series templates, per-item trials with
//! anchors and hidden reference, and per-listener randomisation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::artifacts::{derive_seed, ArtifactKind, Quality, StereoMode};
use crate::error::{Error, Result};
use crate::manifest::{Manifest, StimulusKind};

/// Rated conditions per trial, hidden reference excluded.
pub const CONDITIONS_PER_TRIAL: usize = 7;
/// Stimuli per trial including the hidden reference.
pub const STIMULI_PER_TRIAL: usize = CONDITIONS_PER_TRIAL + 1;
/// Trial count of the published test design.
pub const REFERENCE_TRIAL_COUNT: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Series {
    SHLR,
    QNLR,
    SHMS,
    QNMS,
    SHmix,
    QNmix,
}

impl Series {
    pub const ALL: [Series; 6] = [
        Series::SHLR,
        Series::QNLR,
        Series::SHMS,
        Series::QNMS,
        Series::SHmix,
        Series::QNmix,
    ];

    pub fn artifact(self) -> ArtifactKind {
        match self {
            Series::SHLR | Series::SHMS | Series::SHmix => ArtifactKind::SH,
            Series::QNLR | Series::QNMS | Series::QNmix => ArtifactKind::QN,
        }
    }

    /// Mixed series present LR and MS side by side.
    pub fn is_mixed(self) -> bool {
        matches!(self, Series::SHmix | Series::QNmix)
    }

    pub fn name(self) -> &'static str {
        match self {
            Series::SHLR => "SHLR",
            Series::QNLR => "QNLR",
            Series::SHMS => "SHMS",
            Series::QNMS => "QNMS",
            Series::SHmix => "SHmix",
            Series::QNmix => "QNmix",
        }
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Series {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Series::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::UnknownSeries(s.to_owned()))
    }
}

/// What a stimulus in a trial is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ConditionSource {
    QualityLevel {
        kind: ArtifactKind,
        quality: Quality,
        mode: StereoMode,
    },
    Lowpass3500,
    Lowpass7000,
    MonoAnchor,
    HiddenReference,
}

impl ConditionSource {
    /// Short label used in score tables, e.g. `SH30-LR`, `LP3500`, `mono`.
    pub fn label(&self) -> String {
        match *self {
            ConditionSource::QualityLevel {
                kind,
                quality,
                mode,
            } => format!("{}-{mode}", kind.tag(quality)),
            ConditionSource::Lowpass3500 => "LP3500".into(),
            ConditionSource::Lowpass7000 => "LP7000".into(),
            ConditionSource::MonoAnchor => "mono".into(),
            ConditionSource::HiddenReference => "ref".into(),
        }
    }

    /// Inverse of [`ConditionSource::label`].
    pub fn parse_label(label: &str) -> Option<Self> {
        match label {
            "LP3500" => return Some(ConditionSource::Lowpass3500),
            "LP7000" => return Some(ConditionSource::Lowpass7000),
            "mono" => return Some(ConditionSource::MonoAnchor),
            "ref" => return Some(ConditionSource::HiddenReference),
            _ => {}
        }
        let (tag, mode) = label.split_once('-')?;
        let mode = mode.parse().ok()?;
        let kind: ArtifactKind = tag.get(..2)?.parse().ok()?;
        let value: i64 = tag.get(2..)?.parse().ok()?;
        let quality = Quality::ALL
            .into_iter()
            .find(|&q| kind.label_value(q) == value)?;
        Some(ConditionSource::QualityLevel {
            kind,
            quality,
            mode,
        })
    }

    fn manifest_key(&self) -> (StimulusKind, Option<Quality>, Option<StereoMode>) {
        match *self {
            ConditionSource::QualityLevel {
                kind,
                quality,
                mode,
            } => (kind.into(), Some(quality), Some(mode)),
            ConditionSource::Lowpass3500 => (StimulusKind::LP3500, None, None),
            ConditionSource::Lowpass7000 => (StimulusKind::LP7000, None, None),
            ConditionSource::MonoAnchor => (StimulusKind::MONO, None, None),
            ConditionSource::HiddenReference => (StimulusKind::REF, None, None),
        }
    }
}

/// Condition template of one series: exactly seven rated conditions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSeries {
    pub name: Series,
    pub conditions: Vec<ConditionSource>,
}

pub fn series_template(name: Series) -> TrialSeries {
    let kind = name.artifact();
    let level = |quality, mode| ConditionSource::QualityLevel {
        kind,
        quality,
        mode,
    };
    let mut conditions = Vec::with_capacity(CONDITIONS_PER_TRIAL);
    match name {
        Series::SHLR | Series::QNLR => {
            conditions.extend(Quality::ALL.map(|q| level(q, StereoMode::LR)))
        }
        Series::SHMS | Series::QNMS => {
            conditions.extend(Quality::ALL.map(|q| level(q, StereoMode::MS)))
        }
        Series::SHmix | Series::QNmix => {
            let levels = if name == Series::SHmix {
                [Quality::Q3, Quality::Q5]
            } else {
                [Quality::Q2, Quality::Q3]
            };
            for q in levels {
                conditions.push(level(q, StereoMode::LR));
                conditions.push(level(q, StereoMode::MS));
            }
            conditions.push(ConditionSource::MonoAnchor);
        }
    }
    conditions.push(ConditionSource::Lowpass3500);
    conditions.push(ConditionSource::Lowpass7000);
    TrialSeries { name, conditions }
}

pub fn build_series(name: &str) -> Result<TrialSeries> {
    Ok(series_template(name.parse()?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRef {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stimulus {
    pub label: String,
    pub source: ConditionSource,
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trial {
    pub trial_id: String,
    pub item: String,
    pub series: Series,
    /// Open reference.
    pub reference: FileRef,
    /// Seven conditions followed by the hidden reference, in design order.
    pub stimuli: Vec<Stimulus>,
}

impl Trial {
    pub fn stimulus(&self, label: &str) -> Option<&Stimulus> {
        self.stimuli.iter().find(|s| s.label == label)
    }

    pub fn labels(&self) -> Vec<String> {
        self.stimuli.iter().map(|s| s.label.clone()).collect()
    }

    fn validate(&self) -> Result<()> {
        let hidden: Vec<&Stimulus> = self
            .stimuli
            .iter()
            .filter(|s| s.source == ConditionSource::HiddenReference)
            .collect();
        let rated = self.stimuli.len() - hidden.len();
        if rated != CONDITIONS_PER_TRIAL || hidden.len() != 1 {
            return Err(Error::Plan(format!(
                "trial {} has {rated} conditions and {} hidden references",
                self.trial_id,
                hidden.len()
            )));
        }
        if hidden[0].sha256 != self.reference.sha256 {
            return Err(Error::Plan(format!(
                "trial {}: hidden reference differs from open reference",
                self.trial_id
            )));
        }
        let labels: BTreeSet<&str> = self.stimuli.iter().map(|s| s.label.as_str()).collect();
        if labels.len() != self.stimuli.len() {
            return Err(Error::Plan(format!(
                "trial {}: duplicate condition labels",
                self.trial_id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingTrial {
    pub item: String,
    pub series: Series,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanConfig {
    /// Test items per artifact type.
    pub items: BTreeMap<ArtifactKind, Vec<String>>,
    /// Series to include, in presentation-design order.
    pub series: Vec<Series>,
    /// Per-series item lists overriding `items` for that series.
    pub series_items: BTreeMap<Series, Vec<String>>,
    pub training: Vec<TrainingTrial>,
}

impl Default for PlanConfig {
    fn default() -> Self {
        let items = BTreeMap::from([
            (
                ArtifactKind::SH,
                vec![
                    "glock".into(),
                    "Pop".into(),
                    "panDialogM".into(),
                    "panDialogF".into(),
                ],
            ),
            (
                ArtifactKind::QN,
                vec![
                    "violin".into(),
                    "RnB".into(),
                    "panDialogM".into(),
                    "panDialogF".into(),
                ],
            ),
        ]);
        Self {
            items,
            series: Series::ALL.to_vec(),
            series_items: BTreeMap::new(),
            training: vec![
                TrainingTrial {
                    item: "training1".into(),
                    series: Series::SHmix,
                },
                TrainingTrial {
                    item: "training2".into(),
                    series: Series::QNmix,
                },
            ],
        }
    }
}

impl PlanConfig {
    pub fn items_for(&self, series: Series) -> &[String] {
        self.series_items
            .get(&series)
            .or_else(|| self.items.get(&series.artifact()))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Every test item across all selected series.
    pub fn test_items(&self) -> BTreeSet<&str> {
        self.series
            .iter()
            .flat_map(|&s| self.items_for(s))
            .map(String::as_str)
            .collect()
    }
}

/// The experiment design, independent of any listener.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub trials: Vec<Trial>,
    pub training: Vec<Trial>,
    /// Remarks produced while planning (e.g. trial-count differences).
    #[serde(default)]
    pub notes: Vec<String>,
}

fn make_trial(trial_id: String, item: &str, series: Series, manifest: &Manifest) -> Result<Trial> {
    if !manifest.has_item(item) {
        return Err(Error::MissingItem(item.to_owned()));
    }
    let lookup = |source: ConditionSource| {
        let (kind, quality, mode) = source.manifest_key();
        manifest
            .find(item, kind, quality, mode)
            .ok_or_else(|| Error::MissingCondition(format!("{item} {}", source.label())))
    };
    let reference = lookup(ConditionSource::HiddenReference)?;
    let mut stimuli = Vec::with_capacity(STIMULI_PER_TRIAL);
    for source in series_template(series)
        .conditions
        .into_iter()
        .chain([ConditionSource::HiddenReference])
    {
        let row = lookup(source)?;
        stimuli.push(Stimulus {
            label: source.label(),
            source,
            file: row.file.clone(),
            sha256: row.sha256.clone(),
        });
    }
    let trial = Trial {
        trial_id,
        item: item.to_owned(),
        series,
        reference: FileRef {
            file: reference.file.clone(),
            sha256: reference.sha256.clone(),
        },
        stimuli,
    };
    trial.validate()?;
    Ok(trial)
}

/// Builds one trial per (series, item) and the training trials, resolving
/// every stimulus against the manifest.
pub fn design_experiment(manifest: &Manifest, config: &PlanConfig) -> Result<TrialPlan> {
    let test_items = config.test_items();
    if let Some(t) = config
        .training
        .iter()
        .find(|t| test_items.contains(t.item.as_str()))
    {
        return Err(Error::Plan(format!(
            "training item `{}` is also a test item",
            t.item
        )));
    }
    let mut trials = Vec::new();
    for &series in &config.series {
        for item in config.items_for(series) {
            trials.push(make_trial(
                format!("t{:02}", trials.len() + 1),
                item,
                series,
                manifest,
            )?);
        }
    }
    let training = config
        .training
        .iter()
        .enumerate()
        .map(|(i, t)| make_trial(format!("train{}", i + 1), &t.item, t.series, manifest))
        .collect::<Result<Vec<_>>>()?;
    let mut notes = Vec::new();
    if trials.len() != REFERENCE_TRIAL_COUNT {
        let note = format!(
            "design has {} trials; the published test used {REFERENCE_TRIAL_COUNT} (restrict per-series item lists to match)",
            trials.len()
        );
        log::info!("{note}");
        notes.push(note);
    }
    Ok(TrialPlan {
        trials,
        training,
        notes,
    })
}

/// A design with trial and stimulus order fixed for one listener.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListenerPlan {
    pub listener_seed: u64,
    /// Training trials come first and keep their design order.
    pub training: Vec<Trial>,
    pub trials: Vec<Trial>,
}

impl ListenerPlan {
    /// Training trials followed by test trials.
    pub fn sequence(&self) -> impl Iterator<Item = &Trial> {
        self.training.iter().chain(&self.trials)
    }
}

impl TrialPlan {
    pub fn validate(&self) -> Result<()> {
        if self.trials.is_empty() {
            return Err(Error::Plan("plan has no trials".into()));
        }
        let mut ids = BTreeSet::new();
        for t in self.training.iter().chain(&self.trials) {
            t.validate()?;
            if !ids.insert(&t.trial_id) {
                return Err(Error::Plan(format!("duplicate trial id {}", t.trial_id)));
            }
        }
        Ok(())
    }

    pub fn trial(&self, trial_id: &str) -> Option<&Trial> {
        self.training
            .iter()
            .chain(&self.trials)
            .find(|t| t.trial_id == trial_id)
    }

    /// Uniformly shuffles trial order and, within each trial, stimulus
    /// order. Each shuffle is seeded from the listener seed and the trial
    /// id, so it is reproducible.
    pub fn for_listener(&self, listener_seed: u64) -> ListenerPlan {
        let shuffle_stimuli = |trial: &Trial| {
            let mut t = trial.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                listener_seed,
                &format!("stimuli/{}", t.trial_id),
            ));
            t.stimuli.shuffle(&mut rng);
            t
        };
        let mut trials: Vec<Trial> = self.trials.iter().map(shuffle_stimuli).collect();
        trials.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(
            listener_seed,
            "trial-order",
        )));
        ListenerPlan {
            listener_seed,
            training: self.training.iter().map(shuffle_stimuli).collect(),
            trials,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Designs the experiment and randomises it for one listener.
pub fn build_plan(
    manifest: &Manifest,
    config: &PlanConfig,
    listener_seed: u64,
) -> Result<ListenerPlan> {
    Ok(design_experiment(manifest, config)?.for_listener(listener_seed))
}
