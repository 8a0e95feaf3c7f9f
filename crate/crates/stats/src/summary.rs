//! Condition means with bootstrap confidence intervals.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use stereoqual_core::planner::Series;

use crate::bootstrap::{mean, percentile_ci, BootstrapConfig};
use crate::dataset::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grouping {
    /// One summary per (item, series, condition).
    PerItem,
    /// One summary per (series, condition); each listener's scores are first
    /// averaged over the items they rated in that cell.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    /// `None` for pooled summaries.
    pub item: Option<String>,
    pub series: Series,
    pub condition: String,
    pub n: usize,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Per-listener values of every group under `grouping`, keyed by
/// (item, series, condition).
pub fn listener_values(
    dataset: &Dataset,
    grouping: Grouping,
) -> BTreeMap<(Option<String>, Series, String), BTreeMap<String, f64>> {
    let mut acc: BTreeMap<(Option<String>, Series, String), BTreeMap<String, (f64, usize)>> =
        BTreeMap::new();
    for (key, score) in dataset.iter() {
        let item = match grouping {
            Grouping::PerItem => Some(key.item.clone()),
            Grouping::Pooled => None,
        };
        let slot = acc
            .entry((item, key.series, key.condition.clone()))
            .or_default()
            .entry(key.listener.clone())
            .or_insert((0.0, 0));
        slot.0 += score;
        slot.1 += 1;
    }
    acc.into_iter()
        .map(|(k, per)| {
            (
                k,
                per.into_iter()
                    .map(|(l, (s, c))| (l, s / c as f64))
                    .collect(),
            )
        })
        .collect()
}

/// Summarises every group. Output is sorted by (item, series, condition).
pub fn summarize(
    dataset: &Dataset,
    grouping: Grouping,
    config: &BootstrapConfig,
) -> Vec<StatsSummary> {
    listener_values(dataset, grouping)
        .into_iter()
        .filter_map(|((item, series, condition), per)| {
            let values: Vec<f64> = per.into_values().collect();
            let Some((lo, hi)) = percentile_ci(&values, config) else {
                log::warn!("skipping {series}/{condition}: no listeners");
                return None;
            };
            let m = mean(&values);
            Some(StatsSummary {
                item,
                series,
                condition,
                n: values.len(),
                mean: m,
                ci_low: lo.min(m),
                ci_high: hi.max(m),
            })
        })
        .collect()
}
