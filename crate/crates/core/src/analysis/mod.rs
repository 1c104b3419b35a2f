//! Visualization semantics over snapshots: heap reachability, step diffs,
//! type-name simplification, heap naming and the table layout.

mod diff;
mod layout;
mod reach;
mod types;
mod view;

pub use diff::{diff_snapshots, diff_states, frame_key, FieldPath, SnapshotDiff, VarPath, GLOBALS_FRAME};
pub use layout::{
    layout, FrameView, HeapRow, LayoutPrefs, Mark, Section, SectionKind, VariableRow, ViewModel,
};
pub use reach::{annotate_heap_names, heap_reference_names, reachable_heap};
pub use types::simplify_type_name;
pub use view::{diff_base, step_view};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("contract violation: snapshots {prev} and {curr} are not adjacent")]
    NotAdjacent { prev: u64, curr: u64 },
}
