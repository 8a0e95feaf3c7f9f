//! Typed rating dataset read from score tables.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};
use stereoqual_core::planner::Series;

use crate::error::{Result, StatsError};

/// Column names of the session-service export.
pub const EXPORT_COLUMNS: [&str; 5] = ["listener_id", "item", "series", "condition", "score"];

/// Maps the five logical columns onto header names of an input table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub listener: String,
    pub item: String,
    pub series: String,
    pub condition: String,
    pub score: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            listener: "listener_id".into(),
            item: "item".into(),
            series: "series".into(),
            condition: "condition".into(),
            score: "score".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RatingKey {
    pub listener: String,
    pub item: String,
    pub series: Series,
    pub condition: String,
}

impl fmt::Display for RatingKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {})",
            self.listener, self.item, self.series, self.condition
        )
    }
}

/// Scores keyed by (listener, item, series, condition).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    ratings: BTreeMap<RatingKey, f64>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a rating; returns `false` (and leaves the dataset unchanged)
    /// when the key is already present.
    pub fn insert(&mut self, key: RatingKey, score: f64) -> bool {
        use std::collections::btree_map::Entry;
        match self.ratings.entry(key) {
            Entry::Occupied(_) => false,
            Entry::Vacant(v) => {
                v.insert(score);
                true
            }
        }
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&RatingKey, f64)> {
        self.ratings.iter().map(|(k, &v)| (k, v))
    }

    pub fn get(&self, listener: &str, item: &str, series: Series, condition: &str) -> Option<f64> {
        self.ratings
            .get(&RatingKey {
                listener: listener.into(),
                item: item.into(),
                series,
                condition: condition.into(),
            })
            .copied()
    }

    pub fn listeners(&self) -> Vec<&str> {
        let mut l: Vec<&str> = self.ratings.keys().map(|k| k.listener.as_str()).collect();
        l.dedup();
        l.sort_unstable();
        l.dedup();
        l
    }

    pub fn items(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.ratings.keys().map(|k| k.item.as_str()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Per-listener scores of one (item, series, condition) cell.
    pub fn cell(&self, item: &str, series: Series, condition: &str) -> BTreeMap<&str, f64> {
        self.ratings
            .iter()
            .filter(|(k, _)| k.item == item && k.series == series && k.condition == condition)
            .map(|(k, &v)| (k.listener.as_str(), v))
            .collect()
    }
}

/// Reads a score table. Empty input (no header, no rows) yields an empty
/// dataset.
pub fn ingest_scores<R: Read>(reader: R, columns: &ColumnMap) -> Result<Dataset> {
    let mut csv = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv.headers()?.clone();
    let mut dataset = Dataset::new();
    if headers.is_empty() {
        return Ok(dataset);
    }
    let index = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| StatsError::MissingColumn(name.to_owned()))
    };
    let (li, ii, si, ci, vi) = (
        index(&columns.listener)?,
        index(&columns.item)?,
        index(&columns.series)?,
        index(&columns.condition)?,
        index(&columns.score)?,
    );
    for record in csv.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| record.get(i).unwrap_or("");
        let series: Series = field(si).parse().map_err(|_| StatsError::UnknownSeries {
            line,
            label: field(si).to_owned(),
        })?;
        let raw = field(vi);
        let score: f64 = raw
            .parse()
            .ok()
            .filter(|s: &f64| (0.0..=100.0).contains(s))
            .ok_or_else(|| StatsError::ScoreOutOfRange {
                line,
                score: raw.to_owned(),
            })?;
        let key = RatingKey {
            listener: field(li).to_owned(),
            item: field(ii).to_owned(),
            series,
            condition: field(ci).to_owned(),
        };
        if !dataset.insert(key.clone(), score) {
            return Err(StatsError::DuplicateKey {
                line,
                key: key.to_string(),
            });
        }
    }
    Ok(dataset)
}
