use thiserror::Error;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("plan has no trials")]
    EmptyPlan,
    #[error("invalid plan: {0}")]
    Plan(#[from] stereoqual_core::Error),
    #[error("listener `{0}` already has an active session")]
    DuplicateActiveSession(String),
    #[error("listener id must be non-empty")]
    EmptyListener,
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("session is complete")]
    SessionComplete,
    #[error("trial `{trial}` already submitted")]
    AlreadySubmitted { trial: String },
    #[error("expected trial `{expected}`, got `{got}`")]
    WrongTrial { expected: String, got: String },
    #[error("missing rating for stimulus `{0}`")]
    MissingRating(String),
    #[error("stimulus `{0}` is not part of this trial")]
    NotInTrial(String),
    #[error("unknown stimulus `{0}`")]
    UnknownStimulus(String),
    #[error("stimulus `{0}` rated more than once")]
    DuplicateRating(String),
    #[error("score {score} for stimulus `{stimulus}` outside 0..=100")]
    ScoreOutOfRange { stimulus: String, score: i64 },
    #[error("session log was written for plan {logged}, current plan is {current}")]
    PlanMismatch { logged: String, current: String },
    #[error("session log line {line} is corrupt: {reason}")]
    CorruptLog { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = SessionError> = std::result::Result<T, E>;
