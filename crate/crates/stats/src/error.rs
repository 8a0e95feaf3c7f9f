use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("score table is missing column `{0}`")]
    MissingColumn(String),
    #[error("line {line}: duplicate rating for {key}")]
    DuplicateKey { line: u64, key: String },
    #[error("line {line}: score {score} outside 0..=100")]
    ScoreOutOfRange { line: u64, score: String },
    #[error("line {line}: unknown series label `{label}`")]
    UnknownSeries { line: u64, label: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = StatsError> = std::result::Result<T, E>;
