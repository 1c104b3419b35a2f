use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    validate_snapshot, Dialect, HeapObject, Snapshot, StackFrame, ThreadState, ThreadStatus, Value,
    VariableKind, VariableRecord,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("malformed snapshot document at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("invalid snapshot: {}", .violations.join("; "))]
    Invalid { violations: Vec<String> },
}

// Field order in these structs is the on-disk key order.

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireSnapshot {
    language: Dialect,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threads: Option<Vec<WireThread>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stack: Option<Vec<WireFrame>>,
    #[serde(
        rename = "globalStaticVariables",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    globals: Option<Vec<WireVariable>>,
    heap: Vec<WireObject>,
    #[serde(rename = "lineNumber")]
    line_number: u32,
    #[serde(rename = "stepIndex")]
    step_index: u64,
    timestamp: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fault: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireThread {
    name: String,
    status: ThreadStatus,
    stack: Vec<WireFrame>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireFrame {
    function: String,
    #[serde(rename = "frameIndex")]
    frame_index: usize,
    line: u32,
    arguments: Vec<WireVariable>,
    locals: Vec<WireVariable>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireVariable {
    name: String,
    #[serde(rename = "type")]
    declared_type: String,
    value: WireValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    address: Option<String>,
    kind: VariableKind,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireObject {
    id: String,
    #[serde(rename = "type")]
    runtime_type: String,
    fields: Vec<WireVariable>,
    #[serde(rename = "referencedBy")]
    referenced_by: Vec<String>,
}

/// Plain JSON scalars for int/bool/string/null; single-key objects for the
/// variants that would otherwise collide with a string.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum WireValue {
    Null(()),
    Bool(bool),
    Int(i64),
    Str(String),
    Char {
        #[serde(rename = "char")]
        ch: char,
    },
    Ref {
        #[serde(rename = "ref")]
        id: String,
    },
    Addr {
        addr: String,
    },
    Uninit {
        uninit: bool,
    },
}

impl From<&Value> for WireValue {
    fn from(v: &Value) -> Self {
        match v {
            Value::Int(n) => WireValue::Int(*n),
            Value::Char(c) => WireValue::Char { ch: *c },
            Value::Str(s) => WireValue::Str(s.clone()),
            Value::Bool(b) => WireValue::Bool(*b),
            Value::Null => WireValue::Null(()),
            Value::Ref(id) => WireValue::Ref { id: id.clone() },
            Value::Address(a) => WireValue::Addr { addr: a.clone() },
            Value::Uninit => WireValue::Uninit { uninit: true },
        }
    }
}

impl From<WireValue> for Value {
    fn from(v: WireValue) -> Self {
        match v {
            WireValue::Null(()) => Value::Null,
            WireValue::Bool(b) => Value::Bool(b),
            WireValue::Int(n) => Value::Int(n),
            WireValue::Str(s) => Value::Str(s),
            WireValue::Char { ch } => Value::Char(ch),
            WireValue::Ref { id } => Value::Ref(id),
            WireValue::Addr { addr } => Value::Address(addr),
            WireValue::Uninit { .. } => Value::Uninit,
        }
    }
}

impl Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        WireValue::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        WireValue::deserialize(deserializer).map(Into::into)
    }
}

impl From<&VariableRecord> for WireVariable {
    fn from(v: &VariableRecord) -> Self {
        WireVariable {
            name: v.name.clone(),
            declared_type: v.declared_type.clone(),
            value: (&v.value).into(),
            address: v.address.clone(),
            kind: v.kind,
        }
    }
}

impl From<WireVariable> for VariableRecord {
    fn from(v: WireVariable) -> Self {
        VariableRecord {
            name: v.name,
            declared_type: v.declared_type,
            value: v.value.into(),
            address: v.address,
            kind: v.kind,
        }
    }
}

impl From<&StackFrame> for WireFrame {
    fn from(f: &StackFrame) -> Self {
        WireFrame {
            function: f.function_name.clone(),
            frame_index: f.frame_index,
            line: f.line_number,
            arguments: f.arguments.iter().map(Into::into).collect(),
            locals: f.locals.iter().map(Into::into).collect(),
        }
    }
}

impl From<WireFrame> for StackFrame {
    fn from(f: WireFrame) -> Self {
        StackFrame {
            function_name: f.function,
            frame_index: f.frame_index,
            line_number: f.line,
            arguments: f.arguments.into_iter().map(Into::into).collect(),
            locals: f.locals.into_iter().map(Into::into).collect(),
        }
    }
}

impl From<&Snapshot> for WireSnapshot {
    fn from(s: &Snapshot) -> Self {
        WireSnapshot {
            language: s.language,
            threads: s.threads.as_ref().map(|threads| {
                threads
                    .iter()
                    .map(|t| WireThread {
                        name: t.name.clone(),
                        status: t.status,
                        stack: t.stack.iter().map(Into::into).collect(),
                    })
                    .collect()
            }),
            stack: s
                .stack
                .as_ref()
                .map(|frames| frames.iter().map(Into::into).collect()),
            globals: s
                .global_static_variables
                .as_ref()
                .map(|vars| vars.iter().map(Into::into).collect()),
            heap: s
                .heap
                .iter()
                .map(|o| WireObject {
                    id: o.id.clone(),
                    runtime_type: o.runtime_type.clone(),
                    fields: o.fields.iter().map(Into::into).collect(),
                    referenced_by: o.referenced_by.clone(),
                })
                .collect(),
            line_number: s.line_number,
            step_index: s.step_index,
            timestamp: s.timestamp,
            fault: s.fault.clone(),
        }
    }
}

impl From<WireSnapshot> for Snapshot {
    fn from(w: WireSnapshot) -> Self {
        Snapshot {
            language: w.language,
            step_index: w.step_index,
            line_number: w.line_number,
            threads: w.threads.map(|threads| {
                threads
                    .into_iter()
                    .map(|t| ThreadState {
                        name: t.name,
                        status: t.status,
                        stack: t.stack.into_iter().map(Into::into).collect(),
                    })
                    .collect()
            }),
            stack: w.stack.map(|f| f.into_iter().map(Into::into).collect()),
            heap: w
                .heap
                .into_iter()
                .map(|o| HeapObject {
                    id: o.id,
                    runtime_type: o.runtime_type,
                    fields: o.fields.into_iter().map(Into::into).collect(),
                    referenced_by: o.referenced_by,
                })
                .collect(),
            global_static_variables: w.globals.map(|g| g.into_iter().map(Into::into).collect()),
            fault: w.fault,
            timestamp: w.timestamp,
        }
    }
}

/// Renders a snapshot as a pretty-printed JSON document with a fixed key
/// order. Output depends only on the snapshot's contents.
pub fn serialize_snapshot(snapshot: &Snapshot) -> String {
    serde_json::to_string_pretty(&WireSnapshot::from(snapshot))
        .expect("snapshot wire types always serialize")
}

/// Parses and validates a snapshot document.
pub fn parse_snapshot(text: &str) -> Result<Snapshot, ParseError> {
    let wire: WireSnapshot = serde_json::from_str(text).map_err(|e| ParseError::Syntax {
        offset: byte_offset(text, e.line(), e.column()),
        message: e.to_string(),
    })?;
    let snapshot = Snapshot::from(wire);
    let violations = validate_snapshot(&snapshot);
    if violations.is_empty() {
        Ok(snapshot)
    } else {
        Err(ParseError::Invalid { violations })
    }
}

// serde_json reports 1-based lines and 1-based columns (0 at end of input on
// an empty line); convert to a byte offset into `text`.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}
