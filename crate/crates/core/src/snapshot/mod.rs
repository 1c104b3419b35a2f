//! Snapshot data model: one complete program state (stack, heap, globals,
//! current line) captured at one execution step.
//!
//! A java snapshot nests its stack inside a single `threads` block; a cpp
//! snapshot carries a top-level `stack` plus `globalStaticVariables`. The
//! types below can represent either layout (and malformed mixtures of the
//! two) so that [`validate_snapshot`] can report what is wrong instead of
//! the parser silently dropping blocks.

mod codec;
mod validate;

pub use codec::{parse_snapshot, serialize_snapshot, ParseError};
pub use validate::validate_snapshot;

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dialect {
    Java,
    Cpp,
}

impl Dialect {
    pub fn as_str(self) -> &'static str {
        match self {
            Dialect::Java => "java",
            Dialect::Cpp => "cpp",
        }
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Dialect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "java" => Ok(Dialect::Java),
            "cpp" | "c++" => Ok(Dialect::Cpp),
            other => Err(format!("unknown dialect `{other}` (expected java or cpp)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThreadStatus {
    Running,
    Paused,
    Finished,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableKind {
    Argument,
    Local,
    Global,
    Static,
    Field,
}

/// A runtime value as it appears in a snapshot.
///
/// `Ref` holds a heap identity (`obj-N` in java, a hex address in cpp).
/// `Address` is a cpp pointer into the stack or global segment.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Int(i64),
    Char(char),
    Str(String),
    Bool(bool),
    Null,
    Ref(String),
    Address(String),
    Uninit,
}

impl Value {
    pub fn as_ref_id(&self) -> Option<&str> {
        match self {
            Value::Ref(id) => Some(id),
            _ => None,
        }
    }

    /// Short human-readable rendering used by tables and the CLI.
    pub fn display(&self) -> String {
        match self {
            Value::Int(n) => n.to_string(),
            Value::Char(c) => format!("'{}'", c.escape_default()),
            Value::Str(s) => format!("{s:?}"),
            Value::Bool(b) => b.to_string(),
            Value::Null => "null".to_string(),
            Value::Ref(id) => id.clone(),
            Value::Address(addr) => format!("&{addr}"),
            Value::Uninit => "uninit".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableRecord {
    pub name: String,
    pub declared_type: String,
    pub value: Value,
    pub address: Option<String>,
    pub kind: VariableKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StackFrame {
    pub function_name: String,
    /// 0 is the newest (top) frame.
    pub frame_index: usize,
    pub line_number: u32,
    pub arguments: Vec<VariableRecord>,
    pub locals: Vec<VariableRecord>,
}

impl StackFrame {
    pub fn variables(&self) -> impl Iterator<Item = &VariableRecord> {
        self.arguments.iter().chain(self.locals.iter())
    }

    pub fn variable(&self, name: &str) -> Option<&VariableRecord> {
        self.variables().find(|v| v.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreadState {
    pub name: String,
    pub status: ThreadStatus,
    pub stack: Vec<StackFrame>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeapObject {
    pub id: String,
    pub runtime_type: String,
    pub fields: Vec<VariableRecord>,
    pub referenced_by: Vec<String>,
}

impl HeapObject {
    pub fn field(&self, name: &str) -> Option<&VariableRecord> {
        self.fields.iter().find(|f| f.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub language: Dialect,
    pub step_index: u64,
    pub line_number: u32,
    pub threads: Option<Vec<ThreadState>>,
    pub stack: Option<Vec<StackFrame>>,
    pub heap: Vec<HeapObject>,
    pub global_static_variables: Option<Vec<VariableRecord>>,
    /// Runtime fault that ended the program at this step, if any.
    pub fault: Option<String>,
    /// Milliseconds since the unix epoch.
    pub timestamp: u64,
}

impl Snapshot {
    /// Frames of the (single) program stack, newest first, regardless of
    /// whether the dialect nests them inside a thread.
    pub fn frames(&self) -> &[StackFrame] {
        match self.language {
            Dialect::Java => self
                .threads
                .as_ref()
                .and_then(|t| t.first())
                .map(|t| t.stack.as_slice())
                .unwrap_or(&[]),
            Dialect::Cpp => self.stack.as_deref().unwrap_or(&[]),
        }
    }

    /// Every stack frame of every thread, plus the top-level stack if present.
    pub fn all_frames(&self) -> impl Iterator<Item = &StackFrame> {
        self.threads
            .iter()
            .flatten()
            .flat_map(|t| t.stack.iter())
            .chain(self.stack.iter().flatten())
    }

    pub fn globals(&self) -> &[VariableRecord] {
        self.global_static_variables.as_deref().unwrap_or(&[])
    }

    /// Variables that act as reachability roots: every frame's arguments and
    /// locals, then globals.
    pub fn root_variables(&self) -> impl Iterator<Item = &VariableRecord> {
        self.all_frames()
            .flat_map(|f| f.variables())
            .chain(self.globals().iter())
    }

    pub fn object(&self, id: &str) -> Option<&HeapObject> {
        self.heap.iter().find(|o| o.id == id)
    }

    pub fn is_finished(&self) -> bool {
        self.frames().is_empty()
    }
}
