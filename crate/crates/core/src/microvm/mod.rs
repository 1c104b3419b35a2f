//! A small deterministic teaching language with java-like and c-like
//! dialects, executed one statement at a time.
//!
//! Source is parsed, type-checked and compiled to a stack bytecode in which
//! every statement starts with a boundary marker. The VM always pauses on a
//! boundary, which is what the stepping commands in [`DebugSession`] build on.

mod ast;
mod compile;
mod debugger;
mod lexer;
mod parser;
mod program;
mod vm;

pub use debugger::{Breakpoint, DebugError, DebugSession, StepOutcome, MAX_STEPS_PER_COMMAND};
pub use program::{FieldInfo, GlobalInfo, Program, RecordInfo};
pub use vm::{Event, VmState, VmStatus, GLOBALS_BASE, HEAP_BASE, STACK_TOP};

use std::fmt;

use serde::Serialize;

use crate::snapshot::Dialect;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum DiagnosticKind {
    Syntax,
    Type,
    MissingMain,
}

/// A rejected program: where and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub line: u32,
    pub column: u32,
    pub message: String,
}

impl Diagnostic {
    pub(crate) fn syntax(line: u32, column: u32, message: impl Into<String>) -> Self {
        Diagnostic { kind: DiagnosticKind::Syntax, line, column, message: message.into() }
    }

    pub(crate) fn type_error(line: u32, column: u32, message: impl Into<String>) -> Self {
        Diagnostic { kind: DiagnosticKind::Type, line, column, message: message.into() }
    }

    pub(crate) fn missing_main() -> Self {
        Diagnostic { kind: DiagnosticKind::MissingMain, line: 1, column: 1, message: "missing main".into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            DiagnosticKind::Syntax => write!(f, "syntax error at {}:{}: {}", self.line, self.column, self.message),
            DiagnosticKind::Type => write!(f, "type error at {}:{}: {}", self.line, self.column, self.message),
            DiagnosticKind::MissingMain => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for Diagnostic {}

/// Parses and type-checks a program in the given dialect.
pub fn parse_program(source: &str, dialect: Dialect) -> Result<Program, Diagnostic> {
    let tokens = lexer::tokenize(source)?;
    let ast = parser::parse(tokens, dialect)?;
    compile::compile(ast, source, dialect)
}
