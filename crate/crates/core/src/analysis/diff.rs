use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::snapshot::{Snapshot, StackFrame, Value};

/// Frame path used for globals in [`VarPath`].
pub const GLOBALS_FRAME: &str = "globals";

/// Stable key for a frame: function name plus depth counted from the bottom
/// of the stack, rendered as `main#0`. Pushing or popping frames above a
/// frame does not change its key.
pub fn frame_key(function: &str, depth_from_bottom: usize) -> String {
    format!("{function}#{depth_from_bottom}")
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarPath {
    pub frame: String,
    pub name: String,
}

impl VarPath {
    pub fn new(frame: impl Into<String>, name: impl Into<String>) -> Self {
        VarPath { frame: frame.into(), name: name.into() }
    }
}

impl fmt::Display for VarPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.frame, self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FieldPath {
    pub id: String,
    pub field: String,
}

impl FieldPath {
    pub fn new(id: impl Into<String>, field: impl Into<String>) -> Self {
        FieldPath { id: id.into(), field: field.into() }
    }
}

/// What changed between two program states.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SnapshotDiff {
    pub changed_variables: BTreeSet<VarPath>,
    pub created_variables: BTreeSet<VarPath>,
    pub changed_objects: BTreeSet<FieldPath>,
    pub created_objects: BTreeSet<String>,
    pub removed_frames: usize,
}

impl SnapshotDiff {
    pub fn is_empty(&self) -> bool {
        self.changed_variables.is_empty()
            && self.created_variables.is_empty()
            && self.changed_objects.is_empty()
            && self.created_objects.is_empty()
            && self.removed_frames == 0
    }
}

/// Diff of two adjacent trace entries (`curr.step_index == prev.step_index + 1`).
pub fn diff_snapshots(prev: &Snapshot, curr: &Snapshot) -> Result<SnapshotDiff, AnalysisError> {
    if prev.step_index + 1 != curr.step_index {
        return Err(AnalysisError::NotAdjacent {
            prev: prev.step_index,
            curr: curr.step_index,
        });
    }
    Ok(diff_states(prev, curr))
}

/// Compares two program states without any step-adjacency requirement.
/// Used to highlight a whole visible step that spans implicit snapshots.
pub fn diff_states(prev: &Snapshot, curr: &Snapshot) -> SnapshotDiff {
    let mut diff = SnapshotDiff::default();

    let prev_frames = bottom_up(prev.frames());
    let curr_frames = bottom_up(curr.frames());

    for (key, frame) in &curr_frames {
        let before = prev_frames.get(key);
        for var in frame.variables() {
            compare_var(before.and_then(|f| f.variable(&var.name)).map(|v| &v.value), &var.value, VarPath::new(key.clone(), &var.name), &mut diff);
        }
    }
    diff.removed_frames = prev_frames.keys().filter(|k| !curr_frames.contains_key(*k)).count();

    let prev_globals: HashMap<&str, &Value> =
        prev.globals().iter().map(|v| (v.name.as_str(), &v.value)).collect();
    for var in curr.globals() {
        compare_var(
            prev_globals.get(var.name.as_str()).copied(),
            &var.value,
            VarPath::new(GLOBALS_FRAME, &var.name),
            &mut diff,
        );
    }

    for obj in &curr.heap {
        match prev.object(&obj.id) {
            None => {
                diff.created_objects.insert(obj.id.clone());
            }
            Some(old) => {
                for field in &obj.fields {
                    if old.field(&field.name).map(|f| &f.value) != Some(&field.value) {
                        diff.changed_objects.insert(FieldPath::new(&obj.id, &field.name));
                    }
                }
            }
        }
    }
    diff
}

fn compare_var(before: Option<&Value>, after: &Value, path: VarPath, diff: &mut SnapshotDiff) {
    match before {
        None => {
            diff.created_variables.insert(path);
        }
        Some(old) if old != after => {
            diff.changed_variables.insert(path);
        }
        Some(_) => {}
    }
}

fn bottom_up(frames: &[StackFrame]) -> HashMap<String, &StackFrame> {
    frames
        .iter()
        .rev()
        .enumerate()
        .map(|(depth, f)| (frame_key(&f.function_name, depth), f))
        .collect()
}
