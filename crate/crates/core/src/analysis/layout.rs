//! Resolves a snapshot into the row-oriented view the UI and CLI render.
//!
//! The view grows only vertically: the newest stack frame is first, old
//! frames move down, and the newest heap objects and globals are on top.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::diff::{frame_key, FieldPath, SnapshotDiff, VarPath, GLOBALS_FRAME};
use super::{reachable_heap, simplify_type_name};
use crate::snapshot::{Dialect, Snapshot, Value, VariableKind, VariableRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SectionKind {
    Stack,
    Heap,
    Globals,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct LayoutPrefs {
    pub filter_heap: bool,
    pub auto_minimize: bool,
    pub collapsed_sections: BTreeSet<SectionKind>,
    /// Frame keys (see [`frame_key`]) the user collapsed by hand.
    pub collapsed_frames: BTreeSet<String>,
    /// Frame keys the user expanded by hand; wins over auto-minimize.
    pub expanded_frames: BTreeSet<String>,
}

impl Default for LayoutPrefs {
    fn default() -> Self {
        LayoutPrefs {
            filter_heap: true,
            auto_minimize: true,
            collapsed_sections: BTreeSet::new(),
            collapsed_frames: BTreeSet::new(),
            expanded_frames: BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mark {
    Created,
    Changed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VariableRow {
    pub name: String,
    #[serde(rename = "type")]
    pub type_name: String,
    pub value: Value,
    pub display: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub address: Option<String>,
    pub kind: VariableKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mark: Option<Mark>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FrameView {
    pub key: String,
    pub function: String,
    pub frame_index: usize,
    pub line: u32,
    pub collapsed: bool,
    pub rows: Vec<VariableRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HeapRow {
    /// Variables referring to this object, joined for display.
    pub name: String,
    pub id: String,
    #[serde(rename = "type")]
    pub type_name: String,
    pub fields: Vec<VariableRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mark: Option<Mark>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Section {
    Stack { collapsed: bool, frames: Vec<FrameView> },
    Heap { collapsed: bool, rows: Vec<HeapRow> },
    Globals { collapsed: bool, rows: Vec<VariableRow> },
}

impl Section {
    pub fn kind(&self) -> SectionKind {
        match self {
            Section::Stack { .. } => SectionKind::Stack,
            Section::Heap { .. } => SectionKind::Heap,
            Section::Globals { .. } => SectionKind::Globals,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ViewModel {
    pub language: Dialect,
    pub step_index: u64,
    pub line_number: u32,
    pub finished: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<String>,
    pub sections: Vec<Section>,
    pub highlights: SnapshotDiff,
    pub prefs: LayoutPrefs,
}

impl ViewModel {
    pub fn frames(&self) -> &[FrameView] {
        self.sections
            .iter()
            .find_map(|s| match s {
                Section::Stack { frames, .. } => Some(frames.as_slice()),
                _ => None,
            })
            .unwrap_or(&[])
    }

    pub fn heap_rows(&self) -> &[HeapRow] {
        self.sections
            .iter()
            .find_map(|s| match s {
                Section::Heap { rows, .. } => Some(rows.as_slice()),
                _ => None,
            })
            .unwrap_or(&[])
    }

    pub fn global_rows(&self) -> &[VariableRow] {
        self.sections
            .iter()
            .find_map(|s| match s {
                Section::Globals { rows, .. } => Some(rows.as_slice()),
                _ => None,
            })
            .unwrap_or(&[])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("view model always serializes")
    }
}

/// Like [`Value::display`], but a reference to a java string shows its text.
fn display_value(snapshot: &Snapshot, value: &Value) -> String {
    let text = value
        .as_ref_id()
        .and_then(|id| snapshot.object(id))
        .filter(|o| o.runtime_type == "java.lang.String")
        .and_then(|o| o.field("value"));
    match text {
        Some(field) => field.value.display(),
        None => value.display(),
    }
}

/// Lays out one snapshot. `diff` supplies the highlight marks; pass `None`
/// for the first step of a trace.
pub fn layout(snapshot: &Snapshot, diff: Option<&SnapshotDiff>, prefs: &LayoutPrefs) -> ViewModel {
    let empty = SnapshotDiff::default();
    let diff = diff.unwrap_or(&empty);
    let simplify = snapshot.language == Dialect::Java;
    let type_name = |t: &str| -> String {
        if simplify {
            simplify_type_name(t).to_string()
        } else {
            t.to_string()
        }
    };
    let row = |var: &VariableRecord, mark: Option<Mark>| VariableRow {
        name: var.name.clone(),
        type_name: type_name(&var.declared_type),
        value: var.value.clone(),
        display: display_value(snapshot, &var.value),
        address: var.address.clone(),
        kind: var.kind,
        mark,
    };
    let var_mark = |path: VarPath| {
        if diff.created_variables.contains(&path) {
            Some(Mark::Created)
        } else if diff.changed_variables.contains(&path) {
            Some(Mark::Changed)
        } else {
            None
        }
    };

    let frames = snapshot.frames();
    let depth = frames.len();
    let frame_views = frames
        .iter()
        .enumerate()
        .map(|(pos, frame)| {
            let key = frame_key(&frame.function_name, depth - 1 - pos);
            let collapsed = if prefs.collapsed_frames.contains(&key) {
                true
            } else if prefs.expanded_frames.contains(&key) {
                false
            } else {
                prefs.auto_minimize && frame.frame_index != 0
            };
            FrameView {
                rows: frame
                    .variables()
                    .map(|v| row(v, var_mark(VarPath::new(key.clone(), &v.name))))
                    .collect(),
                key,
                function: frame.function_name.clone(),
                frame_index: frame.frame_index,
                line: frame.line_number,
                collapsed,
            }
        })
        .collect();

    let visible = prefs.filter_heap.then(|| reachable_heap(snapshot));
    let heap_rows = snapshot
        .heap
        .iter()
        .rev()
        .filter(|o| visible.as_ref().is_none_or(|v| v.contains(&o.id)))
        .map(|o| HeapRow {
            name: o.referenced_by.join(", "),
            id: o.id.clone(),
            type_name: type_name(&o.runtime_type),
            fields: o
                .fields
                .iter()
                .map(|f| {
                    let changed = diff.changed_objects.contains(&FieldPath::new(&o.id, &f.name));
                    row(f, changed.then_some(Mark::Changed))
                })
                .collect(),
            mark: diff.created_objects.contains(&o.id).then_some(Mark::Created),
        })
        .collect();

    let mut sections = vec![
        Section::Stack {
            collapsed: prefs.collapsed_sections.contains(&SectionKind::Stack),
            frames: frame_views,
        },
        Section::Heap {
            collapsed: prefs.collapsed_sections.contains(&SectionKind::Heap),
            rows: heap_rows,
        },
    ];
    if snapshot.language == Dialect::Cpp {
        sections.push(Section::Globals {
            collapsed: prefs.collapsed_sections.contains(&SectionKind::Globals),
            rows: snapshot
                .globals()
                .iter()
                .rev()
                .map(|g| row(g, var_mark(VarPath::new(GLOBALS_FRAME, &g.name))))
                .collect(),
        });
    }

    ViewModel {
        language: snapshot.language,
        step_index: snapshot.step_index,
        line_number: snapshot.line_number,
        finished: snapshot.is_finished(),
        fault: snapshot.fault.clone(),
        sections,
        highlights: diff.clone(),
        prefs: prefs.clone(),
    }
}
