//! Listening-session service.
//!
//! [`SessionStore`] keeps sessions in a crash-safe event log and enforces
//! the rating rules; [`http`] exposes it to the browser client. Stimuli
//! are addressed by opaque per-session ids, never by condition.

mod error;
pub mod http;
pub mod store;

pub use error::{Result, SessionError};
pub use store::{
    ExportFilter, Rating, RatingRecord, SessionInfo, SessionState, SessionStore, StimulusView,
    TrialView,
};
