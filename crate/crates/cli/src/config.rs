//! Run configuration: one TOML file describing a whole experiment.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stereoqual_core::artifacts::EngineConfig;
use stereoqual_core::audio::BitDepth;
use stereoqual_core::planner::PlanConfig;
use stereoqual_core::synth::SynthKind;
use stereoqual_stats::{BootstrapConfig, ColumnMap, StarThresholds};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    /// Directory of input items, one `{item}.wav` each.
    pub items: PathBuf,
    /// Root of all generated artifacts.
    pub out: PathBuf,
    /// Session log directory; defaults to `{out}/sessions`.
    pub database: Option<PathBuf>,
    /// Score table for `analyze`; defaults to `{out}/scores.csv`.
    pub scores: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            items: "items".into(),
            out: "out".into(),
            database: None,
            scores: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Generation {
    pub seed: u64,
    pub bit_depth: BitDepth,
    pub engine: EngineConfig,
}

impl Default for Generation {
    fn default() -> Self {
        Self {
            seed: 1,
            bit_depth: BitDepth::Int24,
            engine: EngineConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Stats {
    pub bootstrap: BootstrapConfig,
    pub stars: StarThresholds,
    pub columns: ColumnMap,
}

impl Default for Stats {
    fn default() -> Self {
        Self {
            bootstrap: BootstrapConfig::default(),
            stars: StarThresholds::default(),
            columns: ColumnMap::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Serve {
    pub addr: String,
    /// Seed from which per-listener randomisation seeds are derived.
    pub session_seed: u64,
}

impl Default for Serve {
    fn default() -> Self {
        Self {
            addr: "127.0.0.1:8080".into(),
            session_seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Synth {
    pub seconds: f64,
    pub sample_rate: u32,
    /// Item name → generator used by `synth`.
    pub items: BTreeMap<String, SynthKind>,
}

impl Default for Synth {
    fn default() -> Self {
        let items = [
            ("violin", SynthKind::Tonal),
            ("glock", SynthKind::Glock),
            ("Pop", SynthKind::WideMix),
            ("RnB", SynthKind::WideMix),
            ("panDialogM", SynthKind::HardPanned),
            ("panDialogF", SynthKind::HardPanned),
            ("training1", SynthKind::Noisy),
            ("training2", SynthKind::Transient),
        ];
        Self {
            seconds: 4.0,
            sample_rate: stereoqual_core::audio::DATASET_SAMPLE_RATE,
            items: items.into_iter().map(|(n, k)| (n.to_owned(), k)).collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub paths: Paths,
    pub generation: Generation,
    pub plan: PlanConfig,
    pub stats: Stats,
    pub serve: Serve,
    pub synth: Synth,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::input(path.display(), e))?;
        toml::from_str(&text).map_err(|e| CliError::input(path.display(), e))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is serialisable")
    }

    pub fn stimuli_dir(&self) -> PathBuf {
        self.paths.out.join("stimuli")
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.paths.out.join("manifest.jsonl")
    }

    pub fn plan_path(&self) -> PathBuf {
        self.paths.out.join("plan.json")
    }

    pub fn analysis_dir(&self) -> PathBuf {
        self.paths.out.join("analysis")
    }

    pub fn database_dir(&self) -> PathBuf {
        self.paths
            .database
            .clone()
            .unwrap_or_else(|| self.paths.out.join("sessions"))
    }

    pub fn scores_path(&self) -> PathBuf {
        self.paths
            .scores
            .clone()
            .unwrap_or_else(|| self.paths.out.join("scores.csv"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_roundtrip_and_partial_files() {
        let c = RunConfig::default();
        assert_eq!(toml::from_str::<RunConfig>(&c.to_toml()).unwrap(), c);
        let partial: RunConfig =
            toml::from_str("[generation]\nseed = 9\n[stats.bootstrap]\nresamples = 500\n").unwrap();
        assert_eq!(partial.generation.seed, 9);
        assert_eq!(partial.stats.bootstrap.resamples, 500);
        assert_eq!(partial.plan, PlanConfig::default());
    }
}
