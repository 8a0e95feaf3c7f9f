//! Listening-test statistics: typed score ingestion, bootstrap confidence
//! intervals over listeners, paired LR/MS significance tests and
//! figure-ready tables.

pub mod bootstrap;
pub mod compare;
pub mod dataset;
mod error;
pub mod figures;
pub mod summary;
pub mod wilcoxon;

pub use bootstrap::BootstrapConfig;
pub use compare::{compare_lr_ms, Comparison, Context, SignificanceResult, StarThresholds, Stars};
pub use dataset::{ingest_scores, ColumnMap, Dataset, RatingKey};
pub use error::{Result, StatsError};
pub use figures::{export_figure_data, FigureTable, Layout};
pub use summary::{summarize, Grouping, StatsSummary};
