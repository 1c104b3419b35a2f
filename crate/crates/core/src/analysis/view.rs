use super::{diff_states, layout, LayoutPrefs, SnapshotDiff, ViewModel};
use crate::snapshot::Snapshot;

/// Step whose state the highlights of `step` are measured against.
///
/// Highlights cover the last step the user saw. With implicit snapshots
/// skipped, a visible step is compared with the previous visible one;
/// otherwise (and for implicit steps) with the step right before it.
pub fn diff_base(step: u64, skip_implicit: bool, is_implicit: impl Fn(u64) -> bool) -> Option<u64> {
    let prev = step.checked_sub(1)?;
    if !skip_implicit || is_implicit(step) {
        return Some(prev);
    }
    (0..=prev).rev().find(|&s| !is_implicit(s)).or(Some(prev))
}

/// Lays out `current` with highlights relative to `base`.
pub fn step_view(current: &Snapshot, base: Option<&Snapshot>, prefs: &LayoutPrefs) -> (ViewModel, SnapshotDiff) {
    let diff = base.map(|b| diff_states(b, current)).unwrap_or_default();
    let view = layout(current, base.map(|_| &diff), prefs);
    (view, diff)
}
