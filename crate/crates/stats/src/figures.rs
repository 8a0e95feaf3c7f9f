//! Flat, plot-ready tables derived from summaries and comparisons.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use stereoqual_core::artifacts::StereoMode;
use stereoqual_core::planner::{ConditionSource, Series};

use crate::compare::{Context, SignificanceResult};
use crate::summary::StatsSummary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    /// Pooled results of the separated series, one panel per series.
    Overall,
    /// Pooled results of the mixed series with LR/MS significance bars.
    Mixed,
    /// Per-item results of every series, one panel per (item, series).
    PerItem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Marker {
    /// LR conditions.
    Open,
    /// MS conditions.
    Filled,
    Anchor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRow {
    pub panel: String,
    pub x: usize,
    pub item: String,
    pub series: Series,
    pub condition: String,
    pub n: usize,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub marker: Marker,
    /// `QN`, `SH`, or `anchor`.
    pub color: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarRow {
    pub panel: String,
    pub x: usize,
    pub lr_condition: String,
    pub ms_condition: String,
    pub p_value: f64,
    pub stars: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FigureTable {
    pub points: Vec<PointRow>,
    pub bars: Vec<BarRow>,
}

/// Horizontal position: quality levels 1..=5, then LP3500, LP7000, mono,
/// hidden reference.
pub fn x_position(condition: &str) -> usize {
    match ConditionSource::parse_label(condition) {
        Some(ConditionSource::QualityLevel { quality, .. }) => quality.index() + 1,
        Some(ConditionSource::Lowpass3500) => 6,
        Some(ConditionSource::Lowpass7000) => 7,
        Some(ConditionSource::MonoAnchor) => 8,
        Some(ConditionSource::HiddenReference) => 9,
        None => 10,
    }
}

fn marker_and_color(condition: &str) -> (Marker, String) {
    match ConditionSource::parse_label(condition) {
        Some(ConditionSource::QualityLevel { kind, mode, .. }) => {
            let marker = if mode == StereoMode::LR {
                Marker::Open
            } else {
                Marker::Filled
            };
            (marker, kind.to_string())
        }
        _ => (Marker::Anchor, "anchor".into()),
    }
}

fn panel(item: Option<&str>, series: Series) -> String {
    match item {
        Some(i) => format!("{i}/{series}"),
        None => series.to_string(),
    }
}

fn wanted(layout: Layout, item: Option<&str>, series: Series) -> bool {
    match layout {
        Layout::Overall => item.is_none() && !series.is_mixed(),
        Layout::Mixed => item.is_none() && series.is_mixed(),
        Layout::PerItem => item.is_some(),
    }
}

/// Builds one figure's tables. Rows are sorted by (panel, x, condition) so
/// output depends only on the inputs.
pub fn export_figure_data(
    summaries: &[StatsSummary],
    comparisons: &[SignificanceResult],
    layout: Layout,
) -> FigureTable {
    let mut points: Vec<PointRow> = summaries
        .iter()
        .filter(|s| wanted(layout, s.item.as_deref(), s.series))
        .map(|s| {
            let (marker, color) = marker_and_color(&s.condition);
            PointRow {
                panel: panel(s.item.as_deref(), s.series),
                x: x_position(&s.condition),
                item: s.item.clone().unwrap_or_else(|| "pooled".into()),
                series: s.series,
                condition: s.condition.clone(),
                n: s.n,
                mean: s.mean,
                ci_low: s.ci_low,
                ci_high: s.ci_high,
                marker,
                color,
            }
        })
        .collect();
    points.sort_by(|a, b| (&a.panel, a.x, &a.condition).cmp(&(&b.panel, b.x, &b.condition)));

    let mut bars: Vec<BarRow> = comparisons
        .iter()
        .filter(|c| match layout {
            Layout::Overall => c.item.is_none() && c.context == Context::Separated,
            Layout::Mixed => c.item.is_none() && c.context == Context::Mixed,
            Layout::PerItem => c.item.is_some(),
        })
        .map(|c| BarRow {
            panel: match c.context {
                Context::Mixed => panel(c.item.as_deref(), c.lr.series),
                // Separated pairs span two series panels; name both.
                Context::Separated => {
                    let pair = format!("{}|{}", c.lr.series, c.ms.series);
                    c.item
                        .as_deref()
                        .map_or(pair.clone(), |i| format!("{i}/{pair}"))
                }
            },
            x: x_position(&c.lr.condition),
            lr_condition: c.lr.condition.clone(),
            ms_condition: c.ms.condition.clone(),
            p_value: c.p_value,
            stars: c.stars.to_string(),
        })
        .collect();
    bars.sort_by(|a, b| (&a.panel, a.x).cmp(&(&b.panel, b.x)));
    FigureTable { points, bars }
}

impl FigureTable {
    pub fn points_csv(&self) -> String {
        let mut s =
            String::from("panel,x,item,series,condition,n,mean,ci_low,ci_high,marker,color\n");
        for p in &self.points {
            let marker = match p.marker {
                Marker::Open => "open",
                Marker::Filled => "filled",
                Marker::Anchor => "anchor",
            };
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{:.4},{:.4},{:.4},{marker},{}",
                p.panel,
                p.x,
                p.item,
                p.series,
                p.condition,
                p.n,
                p.mean,
                p.ci_low,
                p.ci_high,
                p.color
            );
        }
        s
    }

    /// Empty comparisons give a header-only table.
    pub fn bars_csv(&self) -> String {
        let mut s = String::from("panel,x,lr_condition,ms_condition,p_value,stars\n");
        for b in &self.bars {
            let _ = writeln!(
                s,
                "{},{},{},{},{:.6e},{}",
                b.panel, b.x, b.lr_condition, b.ms_condition, b.p_value, b.stars
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(item: Option<&str>, series: Series, condition: &str, mean: f64) -> StatsSummary {
        StatsSummary {
            item: item.map(Into::into),
            series,
            condition: condition.into(),
            n: 16,
            mean,
            ci_low: mean - 5.0,
            ci_high: mean + 5.0,
        }
    }

    #[test]
    fn overall_layout_one_row_per_condition() {
        let s = vec![
            summary(None, Series::SHLR, "LP3500", 20.0),
            summary(None, Series::SHLR, "SH70-LR", 15.0),
            summary(None, Series::SHmix, "SH30-LR", 50.0),
            summary(Some("Pop"), Series::SHLR, "SH70-LR", 14.0),
        ];
        let t = export_figure_data(&s, &[], Layout::Overall);
        assert_eq!(t.points.len(), 2);
        assert_eq!(t.points[0].condition, "SH70-LR");
        assert_eq!((t.points[0].x, t.points[0].marker), (1, Marker::Open));
        assert_eq!((t.points[1].x, t.points[1].marker), (6, Marker::Anchor));
        assert!(t.bars.is_empty());
        assert_eq!(t.bars_csv().lines().count(), 1);
        assert!(t
            .points_csv()
            .contains("SHLR,1,pooled,SHLR,SH70-LR,16,15.0000,10.0000,20.0000,open,SH"));
    }

    #[test]
    fn x_positions() {
        assert_eq!(x_position("QN0-MS"), 1);
        assert_eq!(x_position("QN24-LR"), 5);
        assert_eq!(x_position("SH10-LR"), 5);
        assert_eq!(x_position("mono"), 8);
    }
}
