use std::fmt;

use super::{Trace, TraceError};
use crate::snapshot::Snapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Backward,
    Forward,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Backward => "previous",
            Direction::Forward => "next",
        })
    }
}

/// A position in a trace. With `skip_implicit` set, stepping moves between
/// visible snapshots only; jumps may still land on implicit ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cursor {
    position: u64,
    skip_implicit: bool,
}

impl Cursor {
    pub fn new(skip_implicit: bool) -> Self {
        Cursor { position: 0, skip_implicit }
    }

    pub fn position(&self) -> u64 {
        self.position
    }

    pub fn skip_implicit(&self) -> bool {
        self.skip_implicit
    }

    pub fn set_skip_implicit(&mut self, skip: bool) {
        self.skip_implicit = skip;
    }

    /// Position the cursor would move to, without moving it.
    pub fn peek(&self, trace: &Trace, direction: Direction) -> Option<u64> {
        let visible = |s: &u64| !self.skip_implicit || !trace.is_implicit(*s);
        match direction {
            Direction::Backward => (0..self.position).rev().find(visible),
            Direction::Forward => (self.position + 1..trace.len()).find(visible),
        }
    }

    fn step(&mut self, trace: &Trace, direction: Direction) -> Result<Snapshot, TraceError> {
        let target = self
            .peek(trace, direction)
            .ok_or(TraceError::Boundary { position: self.position, direction })?;
        let snapshot = trace.get(target)?;
        self.position = target;
        Ok(snapshot)
    }

    pub fn back_step(&mut self, trace: &Trace) -> Result<Snapshot, TraceError> {
        self.step(trace, Direction::Backward)
    }

    pub fn forward_step(&mut self, trace: &Trace) -> Result<Snapshot, TraceError> {
        self.step(trace, Direction::Forward)
    }

    pub fn jump(&mut self, trace: &Trace, step: u64) -> Result<Snapshot, TraceError> {
        let snapshot = trace.get(step)?;
        self.position = step;
        Ok(snapshot)
    }

    /// Moves to the newest snapshot.
    pub fn jump_to_latest(&mut self, trace: &Trace) -> Result<Snapshot, TraceError> {
        let last = trace.len().checked_sub(1).ok_or(TraceError::OutOfRange { step: 0, count: 0 })?;
        self.jump(trace, last)
    }

    pub fn is_at_latest(&self, trace: &Trace) -> bool {
        self.position + 1 == trace.len()
    }
}
