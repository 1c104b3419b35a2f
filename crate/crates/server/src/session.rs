//! Debug sessions: a live VM, its persisted trace and a navigation cursor.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use memtrace_core::analysis::{diff_base, step_view, LayoutPrefs, SnapshotDiff, ViewModel};
use memtrace_core::microvm::{parse_program, Breakpoint, DebugError, DebugSession, Diagnostic, StepOutcome};
use memtrace_core::snapshot::Dialect;
use memtrace_core::trace::{Cursor, Trace, TraceError, TraceMeta};
use memtrace_core::Clock;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::broadcast;

const EVENT_BUFFER: usize = 64;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("{0}")]
    Diagnostic(Diagnostic),
    #[error("breakpoint line {line} holds no executable statement")]
    Breakpoint { line: u32 },
    #[error("session finished")]
    Finished,
    #[error("navigate to latest first")]
    Historical,
    #[error("{0}")]
    Boundary(TraceError),
    #[error("{0}")]
    OutOfRange(TraceError),
    #[error("{0}")]
    Storage(TraceError),
    #[error("{0}")]
    BadRequest(String),
}

impl SessionError {
    /// Stable machine-readable name of the error class.
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::UnknownSession(_) => "unknownSession",
            SessionError::Diagnostic(_) => "diagnostic",
            SessionError::Breakpoint { .. } => "breakpoint",
            SessionError::Finished => "sessionFinished",
            SessionError::Historical => "historicalCursor",
            SessionError::Boundary(_) => "boundary",
            SessionError::OutOfRange(_) => "outOfRange",
            SessionError::Storage(_) => "storage",
            SessionError::BadRequest(_) => "badRequest",
        }
    }
}

impl From<TraceError> for SessionError {
    fn from(e: TraceError) -> Self {
        match e {
            TraceError::Boundary { .. } => SessionError::Boundary(e),
            TraceError::OutOfRange { .. } => SessionError::OutOfRange(e),
            other => SessionError::Storage(other),
        }
    }
}

impl From<DebugError> for SessionError {
    fn from(e: DebugError) -> Self {
        match e {
            DebugError::NotExecutable { line } => SessionError::Breakpoint { line },
            DebugError::SessionFinished => SessionError::Finished,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Run,
    StepInto,
    StepOver,
    StepReturn,
    BackStep,
    ForwardStep,
    Jump(u64),
}

impl Action {
    pub fn is_live(self) -> bool {
        matches!(self, Action::Run | Action::StepInto | Action::StepOver | Action::StepReturn)
    }

    /// Parses the wire form: an action name plus the optional argument.
    pub fn from_parts(name: &str, arg: Option<u64>) -> Result<Self, SessionError> {
        Ok(match (name, arg) {
            ("run", _) => Action::Run,
            ("stepInto", _) => Action::StepInto,
            ("stepOver", _) => Action::StepOver,
            ("stepReturn", _) => Action::StepReturn,
            ("backStep", _) => Action::BackStep,
            ("forwardStep", _) => Action::ForwardStep,
            ("jump", Some(step)) => Action::Jump(step),
            ("jump", None) => return Err(SessionError::BadRequest("jump needs a step argument".into())),
            (other, _) => return Err(SessionError::BadRequest(format!("unknown action {other}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Paused,
    Finished,
    Error,
}

/// Response to every command, and the document pushed to subscribers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepPayload {
    pub step: u64,
    pub view: ViewModel,
    pub diff: SnapshotDiff,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionInfo {
    pub session_id: String,
    pub dialect: Dialect,
    pub source: String,
    pub breakpoints: Vec<u32>,
    pub status: SessionStatus,
    pub count: u64,
    pub position: u64,
    pub skip_implicit: bool,
}

/// A trace plus a cursor over it. Shared by live sessions and offline
/// replay so both produce the same views.
#[derive(Debug)]
pub struct Timeline {
    trace: Trace,
    cursor: Cursor,
}

impl Timeline {
    pub fn new(trace: Trace, skip_implicit: bool) -> Self {
        Timeline { trace, cursor: Cursor::new(skip_implicit) }
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn cursor(&self) -> &Cursor {
        &self.cursor
    }

    pub fn set_skip_implicit(&mut self, skip: bool) {
        self.cursor.set_skip_implicit(skip);
    }

    /// View of `step` with highlights against the step the user saw before.
    pub fn payload(&self, step: u64, prefs: &LayoutPrefs) -> Result<StepPayload, SessionError> {
        let current = self.trace.get(step)?;
        let base = diff_base(step, self.cursor.skip_implicit(), |s| self.trace.is_implicit(s))
            .map(|b| self.trace.get(b))
            .transpose()?;
        let (view, diff) = step_view(&current, base.as_ref(), prefs);
        Ok(StepPayload { step, view, diff })
    }

    pub fn navigate(&mut self, action: Action, prefs: &LayoutPrefs) -> Result<StepPayload, SessionError> {
        match action {
            Action::BackStep => self.cursor.back_step(&self.trace)?,
            Action::ForwardStep => self.cursor.forward_step(&self.trace)?,
            Action::Jump(step) => self.cursor.jump(&self.trace, step)?,
            _ => return Err(SessionError::BadRequest("not a navigation action".into())),
        };
        self.payload(self.cursor.position(), prefs)
    }

    fn record(&mut self, outcome: StepOutcome) -> Result<u64, SessionError> {
        for s in &outcome.implicit {
            self.trace.append(s, true)?;
        }
        let step = self.trace.append(&outcome.stop, false)?;
        self.cursor.jump(&self.trace, step)?;
        Ok(step)
    }
}

struct Inner {
    debug: DebugSession,
    timeline: Timeline,
    prefs: LayoutPrefs,
    status: SessionStatus,
}

pub struct Session {
    id: String,
    dialect: Dialect,
    source: String,
    breakpoints: Vec<u32>,
    inner: Mutex<Inner>,
    events: broadcast::Sender<String>,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session").field("id", &self.id).field("dialect", &self.dialect).finish()
    }
}

impl Session {
    pub fn id(&self) -> &str {
        &self.id
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn info(&self) -> SessionInfo {
        let inner = self.lock();
        SessionInfo {
            session_id: self.id.clone(),
            dialect: self.dialect,
            source: self.source.clone(),
            breakpoints: self.breakpoints.clone(),
            status: inner.status,
            count: inner.timeline.trace().len(),
            position: inner.timeline.cursor().position(),
            skip_implicit: inner.timeline.cursor().skip_implicit(),
        }
    }

    pub fn trace_dir(&self) -> PathBuf {
        self.lock().timeline.trace().dir().to_path_buf()
    }

    /// Receives the JSON text of every command payload, in order.
    pub fn subscribe(&self) -> broadcast::Receiver<String> {
        self.events.subscribe()
    }

    pub fn set_skip_implicit(&self, skip: bool) {
        self.lock().timeline.set_skip_implicit(skip);
    }

    /// Runs one command. Its JSON text is broadcast to subscribers.
    pub fn command(&self, action: Action) -> Result<StepPayload, SessionError> {
        let mut inner = self.lock();
        let payload = Self::execute(&mut inner, action)?;
        // Sent under the lock so subscribers see commands in order. No
        // subscribers is fine.
        let _ = self.events.send(serde_json::to_string(&payload).expect("payload serializes"));
        Ok(payload)
    }

    /// [`Session::command`] returning the exact text that was broadcast.
    pub fn command_json(&self, action: Action) -> Result<String, SessionError> {
        self.command(action).map(|p| serde_json::to_string(&p).expect("payload serializes"))
    }

    fn execute(inner: &mut Inner, action: Action) -> Result<StepPayload, SessionError> {
        if !action.is_live() {
            return inner.timeline.navigate(action, &inner.prefs);
        }
        if inner.status != SessionStatus::Paused {
            return Err(SessionError::Finished);
        }
        if !inner.timeline.cursor().is_at_latest(inner.timeline.trace()) {
            return Err(SessionError::Historical);
        }
        let outcome = match action {
            Action::Run => inner.debug.run_to_breakpoint(),
            Action::StepInto => inner.debug.step_into(),
            Action::StepOver => inner.debug.step_over(),
            Action::StepReturn => inner.debug.step_return(),
            _ => unreachable!("navigation handled above"),
        }?;
        inner.status = if outcome.stop.fault.is_some() {
            SessionStatus::Error
        } else if inner.debug.is_live() {
            SessionStatus::Paused
        } else {
            SessionStatus::Finished
        };
        let step = inner.timeline.record(outcome)?;
        inner.timeline.payload(step, &inner.prefs)
    }

    /// Payload at the cursor without moving it.
    pub fn current(&self) -> Result<StepPayload, SessionError> {
        let inner = self.lock();
        inner.timeline.payload(inner.timeline.cursor().position(), &inner.prefs)
    }

    /// Pure read: the view of `step` (default: the cursor) under `prefs`
    /// (default: the session's own).
    pub fn view(&self, step: Option<u64>, prefs: Option<&LayoutPrefs>) -> Result<ViewModel, SessionError> {
        let inner = self.lock();
        let step = step.unwrap_or(inner.timeline.cursor().position());
        Ok(inner.timeline.payload(step, prefs.unwrap_or(&inner.prefs))?.view)
    }

    pub fn prefs(&self) -> LayoutPrefs {
        self.lock().prefs.clone()
    }

    /// The stored snapshot document, byte for byte.
    pub fn snapshot_text(&self, step: u64) -> Result<String, SessionError> {
        Ok(self.lock().timeline.trace().read_raw(step)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CreateRequest {
    pub source: String,
    pub dialect: Dialect,
    #[serde(default)]
    pub breakpoints: Vec<u32>,
    /// Name recorded in the trace metadata; defaults to the stored copy.
    #[serde(default)]
    pub source_file: Option<String>,
}

/// Registry of live sessions, each tracing into its own directory under
/// `root`.
pub struct SessionManager {
    root: PathBuf,
    clock: Arc<dyn Clock>,
    sessions: RwLock<HashMap<String, Arc<Session>>>,
}

impl SessionManager {
    pub fn new(root: impl Into<PathBuf>, clock: Arc<dyn Clock>) -> Self {
        SessionManager { root: root.into(), clock, sessions: RwLock::new(HashMap::new()) }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn get(&self, id: &str) -> Result<Arc<Session>, SessionError> {
        self.sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownSession(id.to_string()))
    }

    /// Parses, starts and registers a session; returns it with the step-0
    /// payload.
    pub fn create(&self, req: CreateRequest) -> Result<(Arc<Session>, StepPayload), SessionError> {
        let program = Arc::new(parse_program(&req.source, req.dialect).map_err(SessionError::Diagnostic)?);
        let bps: Vec<_> = req.breakpoints.iter().copied().map(Breakpoint::at).collect();
        let (debug, first) = DebugSession::start(program, &bps, self.clock.clone())?;

        let id = uuid::Uuid::new_v4().simple().to_string();
        let dir = self.root.join(&id);
        let copy = format!("source.{}", req.dialect.as_str());
        let meta = TraceMeta {
            session_id: id.clone(),
            dialect: req.dialect,
            source_file: req.source_file.clone().unwrap_or_else(|| copy.clone()),
        };
        let mut trace = Trace::create(&dir, meta)?;
        std::fs::write(dir.join(&copy), &req.source)
            .map_err(|source| SessionError::Storage(TraceError::Io { path: dir.join(&copy), source }))?;
        trace.append(&first, false)?;

        let status = if debug.is_live() { SessionStatus::Paused } else { SessionStatus::Finished };
        let session = Arc::new(Session {
            id: id.clone(),
            dialect: req.dialect,
            source: req.source,
            breakpoints: req.breakpoints,
            inner: Mutex::new(Inner {
                debug,
                timeline: Timeline::new(trace, true),
                prefs: LayoutPrefs::default(),
                status,
            }),
            events: broadcast::channel(EVENT_BUFFER).0,
        });
        let payload = session.current()?;
        self.sessions.write().unwrap_or_else(|p| p.into_inner()).insert(id, session.clone());
        Ok((session, payload))
    }
}
