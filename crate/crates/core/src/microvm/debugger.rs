use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

use super::vm::{Event, VmState, VmStatus};
use super::Program;
use crate::clock::Clock;
use crate::snapshot::Snapshot;

/// Upper bound on pause points crossed by one command; a command that hits
/// it stops wherever it is.
pub const MAX_STEPS_PER_COMMAND: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Breakpoint {
    pub line_number: u32,
}

impl Breakpoint {
    pub fn at(line_number: u32) -> Self {
        Breakpoint { line_number }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DebugError {
    #[error("line {line} holds no executable statement")]
    NotExecutable { line: u32 },
    #[error("session finished")]
    SessionFinished,
}

/// Snapshots produced by one stepping command. `implicit` are the
/// intermediate states passed through, in order, including returns into a
/// caller mid-statement; `stop` is where the command paused.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub implicit: Vec<Snapshot>,
    pub stop: Snapshot,
}

/// A live execution driven by stepping commands.
pub struct DebugSession {
    vm: VmState,
    breakpoints: BTreeSet<u32>,
    next_step: u64,
    clock: Arc<dyn Clock>,
}

impl std::fmt::Debug for DebugSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DebugSession")
            .field("line", &self.vm.current_line())
            .field("depth", &self.vm.depth())
            .field("status", &self.vm.status())
            .field("breakpoints", &self.breakpoints)
            .field("next_step", &self.next_step)
            .finish()
    }
}

impl DebugSession {
    /// Starts execution paused before the first statement of `main` and
    /// returns the step-0 snapshot.
    pub fn start(
        program: Arc<Program>,
        breakpoints: &[Breakpoint],
        clock: Arc<dyn Clock>,
    ) -> Result<(Self, Snapshot), DebugError> {
        let executable = program.executable_lines();
        if let Some(bad) = breakpoints.iter().find(|b| !executable.contains(&b.line_number)) {
            return Err(DebugError::NotExecutable { line: bad.line_number });
        }
        let mut session = DebugSession {
            vm: VmState::new(program),
            breakpoints: breakpoints.iter().map(|b| b.line_number).collect(),
            next_step: 0,
            clock,
        };
        let first = session.capture();
        Ok((session, first))
    }

    pub fn vm(&self) -> &VmState {
        &self.vm
    }

    pub fn status(&self) -> VmStatus {
        self.vm.status()
    }

    pub fn is_live(&self) -> bool {
        self.vm.status() == VmStatus::Paused
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = Breakpoint> + '_ {
        self.breakpoints.iter().copied().map(Breakpoint::at)
    }

    /// Number of snapshots emitted so far.
    pub fn steps_emitted(&self) -> u64 {
        self.next_step
    }

    fn capture(&mut self) -> Snapshot {
        let snap = self.vm.capture_state(self.next_step, self.clock.now_ms());
        self.next_step += 1;
        snap
    }

    fn drive(&mut self, stop_here: impl Fn(&VmState) -> bool) -> Result<StepOutcome, DebugError> {
        if !self.is_live() {
            return Err(DebugError::SessionFinished);
        }
        let mut implicit = Vec::new();
        for crossed in 1.. {
            match self.vm.advance() {
                Event::Paused if stop_here(&self.vm) || crossed >= MAX_STEPS_PER_COMMAND => break,
                Event::Returned if crossed >= MAX_STEPS_PER_COMMAND => break,
                Event::Paused | Event::Returned => implicit.push(self.capture()),
                Event::Finished | Event::Fault(_) => break,
            }
        }
        Ok(StepOutcome { implicit, stop: self.capture() })
    }

    /// Runs until a breakpoint line is about to execute or the program ends.
    pub fn run_to_breakpoint(&mut self) -> Result<StepOutcome, DebugError> {
        let breakpoints = self.breakpoints.clone();
        self.drive(move |vm| breakpoints.contains(&vm.current_line()))
    }

    /// Executes one statement, entering a callee if the statement calls one.
    pub fn step_into(&mut self) -> Result<StepOutcome, DebugError> {
        self.drive(|_| true)
    }

    /// Executes one statement including any calls it makes.
    pub fn step_over(&mut self) -> Result<StepOutcome, DebugError> {
        let depth = self.vm.depth();
        self.drive(move |vm| vm.depth() <= depth)
    }

    /// Runs until the current function returns.
    pub fn step_return(&mut self) -> Result<StepOutcome, DebugError> {
        let depth = self.vm.depth();
        self.drive(move |vm| vm.depth() < depth)
    }
}
