//! Paired LR-versus-MS significance at matched quality level and
//! presentation context.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use stereoqual_core::artifacts::{ArtifactKind, Quality, StereoMode};
use stereoqual_core::planner::{ConditionSource, Series};

use crate::dataset::Dataset;
use crate::summary::{listener_values, Grouping};
use crate::wilcoxon::signed_rank_test;

pub const TEST_NAME: &str = "wilcoxon-signed-rank";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StarThresholds {
    pub one: f64,
    pub two: f64,
    pub three: f64,
}

impl Default for StarThresholds {
    fn default() -> Self {
        Self {
            one: 0.05,
            two: 0.01,
            three: 0.001,
        }
    }
}

impl StarThresholds {
    pub fn stars(&self, p: f64) -> Stars {
        if p < self.three {
            Stars::Three
        } else if p < self.two {
            Stars::Two
        } else if p < self.one {
            Stars::One
        } else {
            Stars::None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stars {
    None,
    One,
    Two,
    Three,
}

impl fmt::Display for Stars {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stars::None => "",
            Stars::One => "*",
            Stars::Two => "**",
            Stars::Three => "***",
        })
    }
}

/// Separated: LR and MS heard in different trials (e.g. SHLR vs SHMS).
/// Mixed: both in the same trial (SHmix, QNmix).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Context {
    Separated,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRef {
    pub series: Series,
    pub condition: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    /// `None` for comparisons pooled over items.
    pub item: Option<String>,
    pub context: Context,
    pub kind: ArtifactKind,
    pub quality: Quality,
    pub lr: ConditionRef,
    pub ms: ConditionRef,
    pub n: usize,
    /// Mean of MS minus LR over listeners.
    pub mean_difference: f64,
    pub p_value: f64,
    pub stars: Stars,
    pub test: String,
}

/// A pair that could not be tested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPair {
    pub item: Option<String>,
    pub lr: ConditionRef,
    pub ms: ConditionRef,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub results: Vec<SignificanceResult>,
    pub skipped: Vec<SkippedPair>,
}

fn counterpart(series: Series) -> Option<(Context, Series, Series)> {
    match series {
        Series::SHLR => Some((Context::Separated, Series::SHLR, Series::SHMS)),
        Series::QNLR => Some((Context::Separated, Series::QNLR, Series::QNMS)),
        Series::SHmix => Some((Context::Mixed, Series::SHmix, Series::SHmix)),
        Series::QNmix => Some((Context::Mixed, Series::QNmix, Series::QNmix)),
        Series::SHMS | Series::QNMS => None,
    }
}

/// Forms every LR/MS pair present in the data and tests it. Pairs need
/// identical listener sets on both sides; otherwise they are reported in
/// [`Comparison::skipped`].
pub fn compare_lr_ms(
    dataset: &Dataset,
    grouping: Grouping,
    thresholds: &StarThresholds,
) -> Comparison {
    let cells = listener_values(dataset, grouping);
    let mut out = Comparison::default();
    for ((item, series, condition), lr_scores) in &cells {
        let Some((context, lr_series, ms_series)) = counterpart(*series) else {
            continue;
        };
        let Some(ConditionSource::QualityLevel {
            kind,
            quality,
            mode: StereoMode::LR,
        }) = ConditionSource::parse_label(condition)
        else {
            continue;
        };
        debug_assert_eq!(*series, lr_series);
        let ms_label = ConditionSource::QualityLevel {
            kind,
            quality,
            mode: StereoMode::MS,
        }
        .label();
        let lr = ConditionRef {
            series: lr_series,
            condition: condition.clone(),
        };
        let ms = ConditionRef {
            series: ms_series,
            condition: ms_label.clone(),
        };
        let skip = |reason: String| SkippedPair {
            item: item.clone(),
            lr: lr.clone(),
            ms: ms.clone(),
            reason,
        };
        let Some(ms_scores) = cells.get(&(item.clone(), ms_series, ms_label)) else {
            out.skipped.push(skip("no MS counterpart".into()));
            continue;
        };
        if !lr_scores.keys().eq(ms_scores.keys()) {
            let reason = format!(
                "unmatched listener sets ({} LR, {} MS)",
                lr_scores.len(),
                ms_scores.len()
            );
            log::warn!(
                "skipping {}/{} vs {}: {reason}",
                item.as_deref().unwrap_or("pooled"),
                lr.condition,
                ms.condition
            );
            out.skipped.push(skip(reason));
            continue;
        }
        let diffs = paired_differences(lr_scores, ms_scores);
        let r = signed_rank_test(&diffs);
        out.results.push(SignificanceResult {
            item: item.clone(),
            context,
            kind,
            quality,
            lr,
            ms,
            n: diffs.len(),
            mean_difference: diffs.iter().sum::<f64>() / diffs.len() as f64,
            p_value: r.p_value,
            stars: thresholds.stars(r.p_value),
            test: TEST_NAME.into(),
        });
    }
    out.results.sort_by(|a, b| {
        (&a.item, a.context, a.kind, a.quality).cmp(&(&b.item, b.context, b.kind, b.quality))
    });
    out
}

fn paired_differences(lr: &BTreeMap<String, f64>, ms: &BTreeMap<String, f64>) -> Vec<f64> {
    lr.iter().map(|(l, a)| ms[l] - a).collect()
}
