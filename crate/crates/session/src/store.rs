//! Durable session state backed by an append-only JSON-lines event log.
//!
//! Every mutation is one line, written and fsynced before the in-memory
//! state changes, so a crash loses at most the submission in flight. On
//! reopen the log is replayed; a torn final line is truncated away.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stereoqual_core::artifacts::derive_seed;
use stereoqual_core::planner::{ListenerPlan, Series, Trial, TrialPlan};

use crate::error::{Result, SessionError};

pub const LOG_FILE: &str = "sessions.jsonl";

/// Header of exported score tables.
pub const EXPORT_HEADER: [&str; 5] = ["listener_id", "item", "series", "condition", "score"];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
enum Event {
    SessionCreated {
        session_id: String,
        listener_id: String,
        listener_seed: u64,
        plan_sha256: String,
        at_ms: u64,
    },
    TrialSubmitted {
        session_id: String,
        trial_id: String,
        /// Condition label → score.
        ratings: BTreeMap<String, u8>,
        at_ms: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "kebab-case")]
pub enum SessionState {
    Training { index: usize },
    InProgress { index: usize },
    Complete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub session_id: String,
    pub trial_id: String,
    pub condition: String,
    pub score: u8,
    pub submitted_at_ms: u64,
}

/// A client-side rating: opaque stimulus id and slider value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rating {
    pub stimulus_id: String,
    pub score: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StimulusView {
    pub id: String,
    pub url: String,
}

/// What a listener sees of a trial: no item, series or condition names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialView {
    pub session_id: String,
    pub trial_id: String,
    /// 1-based position in the listener's sequence.
    pub position: usize,
    pub total: usize,
    pub training: bool,
    pub reference: StimulusView,
    pub stimuli: Vec<StimulusView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub listener_id: String,
    pub listener_seed: u64,
    #[serde(flatten)]
    pub state: SessionState,
    pub completed: usize,
    pub total: usize,
    pub created_at_ms: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExportFilter {
    /// Also export finished trials of sessions that are not complete.
    pub include_incomplete: bool,
}

#[derive(Debug, Clone)]
struct Session {
    session_id: String,
    listener_id: String,
    listener_seed: u64,
    created_at_ms: u64,
    plan: ListenerPlan,
    submitted: Vec<Vec<RatingRecord>>,
}

impl Session {
    fn total(&self) -> usize {
        self.plan.training.len() + self.plan.trials.len()
    }

    fn current(&self) -> Option<&Trial> {
        self.plan.sequence().nth(self.submitted.len())
    }

    fn state(&self) -> SessionState {
        let done = self.submitted.len();
        let training = self.plan.training.len();
        if done >= self.total() {
            SessionState::Complete
        } else if done < training {
            SessionState::Training { index: done }
        } else {
            SessionState::InProgress {
                index: done - training,
            }
        }
    }

    fn info(&self) -> SessionInfo {
        SessionInfo {
            session_id: self.session_id.clone(),
            listener_id: self.listener_id.clone(),
            listener_seed: self.listener_seed,
            state: self.state(),
            completed: self.submitted.len(),
            total: self.total(),
            created_at_ms: self.created_at_ms,
        }
    }

    fn view(&self, trial: &Trial) -> TrialView {
        let position = self
            .plan
            .sequence()
            .position(|t| t.trial_id == trial.trial_id)
            .unwrap_or(0)
            + 1;
        let make = |label: &str| {
            let id = stimulus_id(&self.session_id, &trial.trial_id, label);
            StimulusView {
                url: format!("/api/sessions/{}/audio/{id}", self.session_id),
                id,
            }
        };
        TrialView {
            session_id: self.session_id.clone(),
            trial_id: trial.trial_id.clone(),
            position,
            total: self.total(),
            training: position <= self.plan.training.len(),
            reference: make(REFERENCE_ROLE),
            stimuli: trial.stimuli.iter().map(|s| make(&s.label)).collect(),
        }
    }
}

const REFERENCE_ROLE: &str = "<open-reference>";

/// Opaque per-session stimulus identifier. Stable across restarts, but
/// reveals nothing about the condition without the session's plan.
pub fn stimulus_id(session_id: &str, trial_id: &str, label: &str) -> String {
    let mut h = Sha256::new();
    for part in ["stereoqual/stimulus/v1", session_id, trial_id, label] {
        h.update(part.as_bytes());
        h.update([0]);
    }
    hex::encode(&h.finalize()[..8])
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn plan_digest(plan: &TrialPlan) -> Result<String> {
    Ok(hex::encode(Sha256::digest(serde_json::to_vec(plan)?)))
}

#[derive(Default)]
struct State {
    sessions: HashMap<String, Session>,
    /// Session ids in creation order.
    order: Vec<String>,
}

pub struct SessionStore {
    plan: TrialPlan,
    plan_sha256: String,
    master_seed: u64,
    path: PathBuf,
    /// Held for the whole of every mutation, which serialises writers.
    log: Mutex<File>,
    state: RwLock<State>,
}

impl SessionStore {
    /// Opens (or creates) the log in `dir` and replays it. Sessions logged
    /// against a different plan are refused.
    pub fn open(dir: impl AsRef<Path>, plan: TrialPlan, master_seed: u64) -> Result<Self> {
        if plan.trials.is_empty() {
            return Err(SessionError::EmptyPlan);
        }
        plan.validate()?;
        let plan_sha256 = plan_digest(&plan)?;
        std::fs::create_dir_all(dir.as_ref())?;
        let path = dir.as_ref().join(LOG_FILE);
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)?;
        let store_state = replay(&mut file, &path, &plan, &plan_sha256)?;
        Ok(Self {
            plan,
            plan_sha256,
            master_seed,
            path,
            log: Mutex::new(file),
            state: RwLock::new(store_state),
        })
    }

    pub fn plan(&self) -> &TrialPlan {
        &self.plan
    }

    pub fn plan_sha256(&self) -> &str {
        &self.plan_sha256
    }

    pub fn log_path(&self) -> &Path {
        &self.path
    }

    pub fn create_session(&self, listener_id: &str) -> Result<SessionInfo> {
        let listener_id = listener_id.trim();
        if listener_id.is_empty() {
            return Err(SessionError::EmptyListener);
        }
        let mut log = self.log.lock();
        let (session_id, listener_seed) = {
            let state = self.state.read();
            let previous: Vec<&Session> = state
                .order
                .iter()
                .map(|id| &state.sessions[id])
                .filter(|s| s.listener_id == listener_id)
                .collect();
            if previous.iter().any(|s| s.state() != SessionState::Complete) {
                return Err(SessionError::DuplicateActiveSession(listener_id.to_owned()));
            }
            let attempt = previous.len();
            let role = format!("listener/{listener_id}/{attempt}");
            let seed = derive_seed(self.master_seed, &role);
            let id = format!(
                "s{}",
                &hex::encode(Sha256::digest(format!("{}/{role}", self.plan_sha256)))[..16]
            );
            (id, seed)
        };
        let event = Event::SessionCreated {
            session_id: session_id.clone(),
            listener_id: listener_id.to_owned(),
            listener_seed,
            plan_sha256: self.plan_sha256.clone(),
            at_ms: now_ms(),
        };
        append(&mut log, &event)?;
        let mut state = self.state.write();
        apply(&mut state, &self.plan, event);
        log::info!("session {session_id} created for listener {listener_id}");
        Ok(state.sessions[&session_id].info())
    }

    pub fn session(&self, session_id: &str) -> Result<SessionInfo> {
        let state = self.state.read();
        state
            .sessions
            .get(session_id)
            .map(Session::info)
            .ok_or_else(|| SessionError::UnknownSession(session_id.into()))
    }

    pub fn sessions(&self) -> Vec<SessionInfo> {
        let state = self.state.read();
        state
            .order
            .iter()
            .map(|id| state.sessions[id].info())
            .collect()
    }

    /// The first trial not yet submitted, or `None` when complete.
    pub fn current_trial(&self, session_id: &str) -> Result<Option<TrialView>> {
        let state = self.state.read();
        let s = state
            .sessions
            .get(session_id)
            .ok_or_else(|| SessionError::UnknownSession(session_id.into()))?;
        Ok(s.current().map(|t| s.view(t)))
    }

    /// Ratings recorded so far, in submission order.
    pub fn ratings(&self, session_id: &str) -> Result<Vec<RatingRecord>> {
        let state = self.state.read();
        let s = state
            .sessions
            .get(session_id)
            .ok_or_else(|| SessionError::UnknownSession(session_id.into()))?;
        Ok(s.submitted.iter().flatten().cloned().collect())
    }

    /// Validates and durably records one trial's ratings; returns the next
    /// trial, or `None` once the session is complete.
    pub fn submit_trial(
        &self,
        session_id: &str,
        trial_id: &str,
        ratings: &[Rating],
    ) -> Result<Option<TrialView>> {
        let mut log = self.log.lock();
        let by_label = {
            let state = self.state.read();
            let s = state
                .sessions
                .get(session_id)
                .ok_or_else(|| SessionError::UnknownSession(session_id.into()))?;
            let Some(current) = s.current() else {
                return Err(if s.plan.sequence().any(|t| t.trial_id == trial_id) {
                    SessionError::AlreadySubmitted {
                        trial: trial_id.into(),
                    }
                } else {
                    SessionError::SessionComplete
                });
            };
            if current.trial_id != trial_id {
                let done = s
                    .plan
                    .sequence()
                    .take(s.submitted.len())
                    .any(|t| t.trial_id == trial_id);
                return Err(if done {
                    SessionError::AlreadySubmitted {
                        trial: trial_id.into(),
                    }
                } else {
                    SessionError::WrongTrial {
                        expected: current.trial_id.clone(),
                        got: trial_id.into(),
                    }
                });
            }
            validate_ratings(session_id, current, ratings)?
        };
        let event = Event::TrialSubmitted {
            session_id: session_id.into(),
            trial_id: trial_id.into(),
            ratings: by_label,
            at_ms: now_ms(),
        };
        append(&mut log, &event)?;
        let mut state = self.state.write();
        apply(&mut state, &self.plan, event);
        let s = &state.sessions[session_id];
        Ok(s.current().map(|t| s.view(t)))
    }

    /// Resolves an opaque stimulus id of a session to its audio file.
    pub fn stimulus_file(&self, session_id: &str, stimulus: &str) -> Result<String> {
        let state = self.state.read();
        let s = state
            .sessions
            .get(session_id)
            .ok_or_else(|| SessionError::UnknownSession(session_id.into()))?;
        for trial in s.plan.sequence() {
            if stimulus_id(session_id, &trial.trial_id, REFERENCE_ROLE) == stimulus {
                return Ok(trial.reference.file.clone());
            }
            if let Some(st) = trial
                .stimuli
                .iter()
                .find(|st| stimulus_id(session_id, &trial.trial_id, &st.label) == stimulus)
            {
                return Ok(st.file.clone());
            }
        }
        Err(SessionError::UnknownStimulus(stimulus.into()))
    }

    /// Score table rows (listener_id, item, series, condition, score),
    /// sorted, training excluded. When a listener has several sessions the
    /// latest one wins.
    pub fn export_rows(&self, filter: ExportFilter) -> Vec<(String, String, Series, String, u8)> {
        let state = self.state.read();
        let mut rows: BTreeMap<(String, String, Series, String), u8> = BTreeMap::new();
        let mut seen_listener: BTreeSet<&str> = BTreeSet::new();
        for s in state.order.iter().rev().map(|id| &state.sessions[id]) {
            if !filter.include_incomplete && s.state() != SessionState::Complete {
                continue;
            }
            if !seen_listener.insert(&s.listener_id) {
                continue;
            }
            for (trial, records) in s
                .plan
                .sequence()
                .zip(&s.submitted)
                .skip(s.plan.training.len())
            {
                for r in records {
                    rows.insert(
                        (
                            s.listener_id.clone(),
                            trial.item.clone(),
                            trial.series,
                            r.condition.clone(),
                        ),
                        r.score,
                    );
                }
            }
        }
        rows.into_iter()
            .map(|((l, i, se, c), v)| (l, i, se, c, v))
            .collect()
    }

    pub fn export_csv(&self, filter: ExportFilter) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(EXPORT_HEADER)?;
        for (l, i, s, c, v) in self.export_rows(filter) {
            w.write_record([l, i, s.to_string(), c, v.to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn validate_ratings(
    session_id: &str,
    trial: &Trial,
    ratings: &[Rating],
) -> Result<BTreeMap<String, u8>> {
    let ids: HashMap<String, &str> = trial
        .stimuli
        .iter()
        .map(|s| {
            (
                stimulus_id(session_id, &trial.trial_id, &s.label),
                s.label.as_str(),
            )
        })
        .collect();
    let mut by_label = BTreeMap::new();
    for r in ratings {
        let label = *ids
            .get(&r.stimulus_id)
            .ok_or_else(|| SessionError::NotInTrial(r.stimulus_id.clone()))?;
        let score = u8::try_from(r.score)
            .ok()
            .filter(|s| *s <= 100)
            .ok_or_else(|| SessionError::ScoreOutOfRange {
                stimulus: r.stimulus_id.clone(),
                score: r.score,
            })?;
        if by_label.insert(label.to_owned(), score).is_some() {
            return Err(SessionError::DuplicateRating(r.stimulus_id.clone()));
        }
    }
    // Report the first missing stimulus in the order the listener sees them.
    if let Some(s) = trial
        .stimuli
        .iter()
        .find(|s| !by_label.contains_key(&s.label))
    {
        return Err(SessionError::MissingRating(stimulus_id(
            session_id,
            &trial.trial_id,
            &s.label,
        )));
    }
    Ok(by_label)
}

fn append(file: &mut File, event: &Event) -> Result<()> {
    let mut line = serde_json::to_vec(event)?;
    line.push(b'\n');
    file.write_all(&line)?;
    file.sync_data()?;
    Ok(())
}

fn apply(state: &mut State, plan: &TrialPlan, event: Event) {
    match event {
        Event::SessionCreated {
            session_id,
            listener_id,
            listener_seed,
            at_ms,
            ..
        } => {
            let session = Session {
                session_id: session_id.clone(),
                listener_id,
                listener_seed,
                created_at_ms: at_ms,
                plan: plan.for_listener(listener_seed),
                submitted: Vec::new(),
            };
            state.order.push(session_id.clone());
            state.sessions.insert(session_id, session);
        }
        Event::TrialSubmitted {
            session_id,
            trial_id,
            ratings,
            at_ms,
        } => {
            let s = state
                .sessions
                .get_mut(&session_id)
                .expect("validated before logging");
            let trial = s.current().expect("validated before logging");
            let records = trial
                .stimuli
                .iter()
                .map(|st| RatingRecord {
                    session_id: session_id.clone(),
                    trial_id: trial_id.clone(),
                    condition: st.label.clone(),
                    score: ratings[&st.label],
                    submitted_at_ms: at_ms,
                })
                .collect();
            s.submitted.push(records);
        }
    }
}

fn replay(file: &mut File, path: &Path, plan: &TrialPlan, plan_sha256: &str) -> Result<State> {
    let mut state = State::default();
    file.seek(SeekFrom::Start(0))?;
    let mut reader = BufReader::new(&*file);
    let mut good_len = 0u64;
    let mut buf = String::new();
    let mut line_no = 0;
    let mut torn = false;
    loop {
        buf.clear();
        let n = reader.read_line(&mut buf)?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let complete = buf.ends_with('\n');
        let event: Event = match serde_json::from_str(buf.trim_end()) {
            Ok(e) => e,
            Err(_) if !complete => {
                torn = true;
                break;
            }
            Err(e) => {
                return Err(SessionError::CorruptLog {
                    line: line_no,
                    reason: e.to_string(),
                })
            }
        };
        check_event(&state, plan_sha256, &event, line_no)?;
        apply(&mut state, plan, event);
        good_len += n as u64;
    }
    drop(reader);
    if torn {
        log::warn!(
            "{}: dropping torn final record at line {line_no}",
            path.display()
        );
        file.set_len(good_len)?;
        file.sync_data()?;
    }
    Ok(state)
}

fn check_event(state: &State, plan_sha256: &str, event: &Event, line: usize) -> Result<()> {
    let corrupt = |reason: String| SessionError::CorruptLog { line, reason };
    match event {
        Event::SessionCreated {
            plan_sha256: logged,
            session_id,
            ..
        } => {
            if logged != plan_sha256 {
                return Err(SessionError::PlanMismatch {
                    logged: logged.clone(),
                    current: plan_sha256.into(),
                });
            }
            if state.sessions.contains_key(session_id) {
                return Err(corrupt(format!("session {session_id} created twice")));
            }
        }
        Event::TrialSubmitted {
            session_id,
            trial_id,
            ratings,
            ..
        } => {
            let s = state
                .sessions
                .get(session_id)
                .ok_or_else(|| corrupt(format!("unknown session {session_id}")))?;
            let current = s
                .current()
                .ok_or_else(|| corrupt(format!("submission to complete session {session_id}")))?;
            if &current.trial_id != trial_id
                || current
                    .stimuli
                    .iter()
                    .any(|st| !ratings.contains_key(&st.label))
            {
                return Err(corrupt(format!(
                    "out-of-order or partial submission {session_id}/{trial_id}"
                )));
            }
        }
    }
    Ok(())
}
