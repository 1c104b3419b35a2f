//! On-disk snapshot traces.
//!
//! Layout of a trace directory:
//!
//! ```text
//! trace.meta.json                                  session id, dialect, source file
//! trace.implicit                                   one implicit step index per line
//! <sessionId>-<step:06>-<timestampMs>.snapshot.json
//! ```
//!
//! Snapshot files are written to a temporary name and renamed into place,
//! so a reader never sees a partial file. The in-memory index is rebuilt by
//! scanning the directory.

mod cursor;

pub use cursor::{Cursor, Direction};

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::snapshot::{parse_snapshot, serialize_snapshot, Dialect, ParseError, Snapshot};

pub const META_FILE: &str = "trace.meta.json";
pub const IMPLICIT_FILE: &str = "trace.implicit";
pub const SNAPSHOT_SUFFIX: &str = ".snapshot.json";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("storage failure at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("contract violation: expected stepIndex {expected}, got {got}")]
    StepGap { expected: u64, got: u64 },
    #[error("step {step} out of range (trace has {count} snapshots)")]
    OutOfRange { step: u64, count: u64 },
    #[error("corrupted snapshot file {file}: {source}")]
    Corrupt {
        file: String,
        #[source]
        source: ParseError,
    },
    #[error("invalid trace directory {path}: {message}")]
    Layout { path: PathBuf, message: String },
    #[error("no {direction} step from position {position}")]
    Boundary { position: u64, direction: Direction },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TraceError + '_ {
    move |source| TraceError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceMeta {
    pub session_id: String,
    pub dialect: Dialect,
    pub source_file: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub step_index: u64,
    pub file_name: String,
    pub implicit: bool,
}

/// File name of one snapshot: `<sessionId>-<step:06>-<timestampMs>.snapshot.json`.
pub fn snapshot_file_name(session_id: &str, step_index: u64, timestamp_ms: u64) -> String {
    format!("{session_id}-{step_index:06}-{timestamp_ms}{SNAPSHOT_SUFFIX}")
}

/// Inverse of [`snapshot_file_name`]: `(sessionId, step, timestamp)`.
pub fn parse_file_name(name: &str) -> Option<(&str, u64, u64)> {
    let stem = name.strip_suffix(SNAPSHOT_SUFFIX)?;
    let (rest, ts) = stem.rsplit_once('-')?;
    let (session, step) = rest.rsplit_once('-')?;
    if session.is_empty() || step.len() < 6 || !step.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((session, step.parse().ok()?, ts.parse().ok()?))
}

/// The persisted snapshot sequence of one session.
#[derive(Debug)]
pub struct Trace {
    dir: PathBuf,
    meta: TraceMeta,
    entries: Vec<TraceEntry>,
}

impl Trace {
    /// Creates the directory (if needed) and an empty trace in it.
    pub fn create(dir: impl Into<PathBuf>, meta: TraceMeta) -> Result<Self, TraceError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let has_snapshots = fs::read_dir(&dir)
            .map_err(io_err(&dir))?
            .filter_map(Result::ok)
            .any(|e| e.file_name().to_string_lossy().ends_with(SNAPSHOT_SUFFIX));
        if has_snapshots {
            return Err(TraceError::Layout { path: dir, message: "directory already holds a trace".into() });
        }
        let text = serde_json::to_string_pretty(&meta).expect("meta serializes");
        write_atomic(&dir, META_FILE, text.as_bytes())?;
        Ok(Trace { dir, meta, entries: Vec::new() })
    }

    /// Loads a trace written earlier, rebuilding the index from the files.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, TraceError> {
        let dir = dir.into();
        let meta_path = dir.join(META_FILE);
        let text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
        let meta: TraceMeta = serde_json::from_str(&text).map_err(|e| TraceError::Layout {
            path: meta_path.clone(),
            message: e.to_string(),
        })?;

        let implicit_path = dir.join(IMPLICIT_FILE);
        let implicit: std::collections::HashSet<u64> = match fs::read_to_string(&implicit_path) {
            Ok(text) => text.lines().filter_map(|l| l.trim().parse().ok()).collect(),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Default::default(),
            Err(e) => return Err(TraceError::Io { path: implicit_path, source: e }),
        };

        let mut found = Vec::new();
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let entry = entry.map_err(io_err(&dir))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if let Some((session, step, _)) = parse_file_name(&name) {
                if session == meta.session_id {
                    found.push((step, name));
                }
            }
        }
        found.sort();
        let mut entries = Vec::with_capacity(found.len());
        for (expected, (step, file_name)) in found.into_iter().enumerate() {
            if step != expected as u64 {
                return Err(TraceError::Layout {
                    path: dir,
                    message: format!("missing or duplicate snapshot for step {expected}"),
                });
            }
            entries.push(TraceEntry { step_index: step, file_name, implicit: implicit.contains(&step) });
        }
        Ok(Trace { dir, meta, entries })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn meta(&self) -> &TraceMeta {
        &self.meta
    }

    pub fn session_id(&self) -> &str {
        &self.meta.session_id
    }

    pub fn len(&self) -> u64 {
        self.entries.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[TraceEntry] {
        &self.entries
    }

    pub fn is_implicit(&self, step: u64) -> bool {
        self.entries.get(step as usize).is_some_and(|e| e.implicit)
    }

    /// Persists `snapshot` as the next step and returns its index.
    pub fn append(&mut self, snapshot: &Snapshot, implicit: bool) -> Result<u64, TraceError> {
        let expected = self.len();
        if snapshot.step_index != expected {
            return Err(TraceError::StepGap { expected, got: snapshot.step_index });
        }
        if implicit {
            let path = self.dir.join(IMPLICIT_FILE);
            let mut f = fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .map_err(io_err(&path))?;
            writeln!(f, "{expected}").map_err(io_err(&path))?;
        }
        let file_name = snapshot_file_name(&self.meta.session_id, expected, snapshot.timestamp);
        write_atomic(&self.dir, &file_name, serialize_snapshot(snapshot).as_bytes())?;
        self.entries.push(TraceEntry { step_index: expected, file_name, implicit });
        Ok(expected)
    }

    fn entry(&self, step: u64) -> Result<&TraceEntry, TraceError> {
        self.entries
            .get(step as usize)
            .ok_or(TraceError::OutOfRange { step, count: self.len() })
    }

    /// Stored document text of one step, byte for byte.
    pub fn read_raw(&self, step: u64) -> Result<String, TraceError> {
        let path = self.dir.join(&self.entry(step)?.file_name);
        fs::read_to_string(&path).map_err(io_err(&path))
    }

    /// Loads and validates the snapshot stored for `step`.
    pub fn get(&self, step: u64) -> Result<Snapshot, TraceError> {
        let text = self.read_raw(step)?;
        parse_snapshot(&text).map_err(|source| TraceError::Corrupt {
            file: self.entry(step).map(|e| e.file_name.clone()).unwrap_or_default(),
            source,
        })
    }
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), TraceError> {
    let tmp = dir.join(format!(".{name}.tmp"));
    let dest = dir.join(name);
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, &dest).map_err(io_err(&dest))
}
