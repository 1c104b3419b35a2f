use std::collections::{BTreeSet, HashSet};

use super::{Dialect, Snapshot, StackFrame, ThreadStatus, Value, VariableKind, VariableRecord};
use crate::analysis::heap_reference_names;

/// Checks every structural invariant of a snapshot. Returns one description
/// per broken rule; an empty list means the snapshot is valid.
pub fn validate_snapshot(snapshot: &Snapshot) -> Vec<String> {
    let mut out = Vec::new();
    check_blocks(snapshot, &mut out);

    if snapshot.line_number == 0 {
        out.push("lineNumber: must be positive".to_string());
    }

    if let Some(threads) = &snapshot.threads {
        for thread in threads {
            match thread.status {
                ThreadStatus::Paused if thread.stack.is_empty() => out.push(format!(
                    "threads[{}]: paused thread has no frames",
                    thread.name
                )),
                ThreadStatus::Finished if !thread.stack.is_empty() => out.push(format!(
                    "threads[{}]: finished thread still has frames",
                    thread.name
                )),
                _ => {}
            }
            check_stack(&thread.stack, &format!("threads[{}].stack", thread.name), &mut out);
        }
    }
    if let Some(stack) = &snapshot.stack {
        check_stack(stack, "stack", &mut out);
    }

    let wants_address = snapshot.language == Dialect::Cpp;
    for var in snapshot.root_variables() {
        if var.kind == VariableKind::Field {
            out.push(format!("{}: kind field is only valid on heap objects", var.name));
        }
        check_address(var, wants_address, &mut out);
    }

    let mut ids = HashSet::new();
    for obj in &snapshot.heap {
        if !ids.insert(obj.id.as_str()) {
            out.push(format!("heap: duplicate id {}", obj.id));
        }
        for field in &obj.fields {
            if field.kind != VariableKind::Field {
                out.push(format!("heap {}.{}: kind must be field", obj.id, field.name));
            }
            if snapshot.language == Dialect::Java && field.address.is_some() {
                out.push(format!("heap {}.{}: address not allowed in java", obj.id, field.name));
            }
        }
    }

    let dangling: BTreeSet<&str> = snapshot
        .root_variables()
        .chain(snapshot.heap.iter().flat_map(|o| o.fields.iter()))
        .filter_map(|v| match &v.value {
            Value::Ref(id) if !ids.contains(id.as_str()) => Some(id.as_str()),
            _ => None,
        })
        .collect();
    out.extend(dangling.into_iter().map(|id| format!("dangling reference: {id}")));

    // Only meaningful once references resolve.
    if out.is_empty() {
        let expected = heap_reference_names(snapshot);
        for obj in &snapshot.heap {
            let want = expected.get(&obj.id).cloned().unwrap_or_default();
            if obj.referenced_by != want {
                out.push(format!(
                    "heap {}: referencedBy {:?} does not match stack references {:?}",
                    obj.id, obj.referenced_by, want
                ));
            }
        }
    }
    out
}

fn check_blocks(s: &Snapshot, out: &mut Vec<String>) {
    match s.language {
        Dialect::Java => {
            if s.stack.is_some() {
                out.push("exclusive block violation: java snapshot has a top-level stack".into());
            }
            if s.global_static_variables.is_some() {
                out.push("exclusive block violation: java snapshot has globalStaticVariables".into());
            }
            match &s.threads {
                None => out.push("threads: missing in java snapshot".into()),
                Some(t) if t.is_empty() => out.push("threads: java snapshot needs at least one thread".into()),
                Some(_) => {}
            }
        }
        Dialect::Cpp => {
            if s.threads.is_some() {
                out.push("exclusive block violation: cpp snapshot has threads".into());
            }
            if s.stack.is_none() {
                out.push("stack: missing in cpp snapshot".into());
            }
            if s.global_static_variables.is_none() {
                out.push("globalStaticVariables: missing in cpp snapshot".into());
            }
        }
    }
}

fn check_stack(frames: &[StackFrame], path: &str, out: &mut Vec<String>) {
    if let Some((pos, frame)) = frames
        .iter()
        .enumerate()
        .find(|(pos, f)| f.frame_index != *pos)
    {
        out.push(format!(
            "{path}: frameIndex not consecutive from 0 (position {pos} has frameIndex {})",
            frame.frame_index
        ));
    }
    for frame in frames {
        if frame.line_number == 0 {
            out.push(format!("{path}[{}]: line must be positive", frame.function_name));
        }
        let mut seen = HashSet::new();
        for var in frame.variables() {
            if !seen.insert(var.name.as_str()) {
                out.push(format!(
                    "{path}[{}]: duplicate variable name {}",
                    frame.function_name, var.name
                ));
            }
        }
    }
}

fn check_address(var: &VariableRecord, wants_address: bool, out: &mut Vec<String>) {
    match (&var.address, wants_address) {
        (None, true) => out.push(format!("{}: address required in cpp", var.name)),
        (Some(_), false) => out.push(format!("{}: address not allowed in java", var.name)),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::parse_snapshot;

    fn demo() -> Snapshot {
        parse_snapshot(include_str!("../../tests/golden/demo_breakpoint.snapshot.json")).unwrap()
    }

    fn main_frame(s: &mut Snapshot) -> &mut StackFrame {
        &mut s.threads.as_mut().unwrap()[0].stack[0]
    }

    #[test]
    fn demo_is_valid() {
        assert_eq!(validate_snapshot(&demo()), Vec::<String>::new());
    }

    #[test]
    fn missing_heap_id_is_dangling() {
        let mut s = demo();
        s.heap.retain(|o| o.id != "obj-1");
        assert_eq!(validate_snapshot(&s), vec!["dangling reference: obj-1".to_string()]);
    }

    #[test]
    fn gap_in_frame_index_is_one_violation() {
        let mut s = demo();
        let mut callee = main_frame(&mut s).clone();
        callee.function_name = "f".into();
        callee.frame_index = 0;
        main_frame(&mut s).frame_index = 2;
        s.threads.as_mut().unwrap()[0].stack.insert(0, callee);
        let v = validate_snapshot(&s);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].contains("frameIndex"));
    }

    #[test]
    fn java_with_address_is_rejected() {
        let mut s = demo();
        main_frame(&mut s).locals[1].address = Some("0x1".into());
        assert_eq!(validate_snapshot(&s), vec!["a: address not allowed in java".to_string()]);
    }

    #[test]
    fn duplicate_locals_are_rejected() {
        let mut s = demo();
        let dup = main_frame(&mut s).locals[1].clone();
        main_frame(&mut s).locals.push(dup);
        let v = validate_snapshot(&s);
        assert!(v.iter().any(|m| m.contains("duplicate variable name a")), "{v:?}");
    }

    #[test]
    fn stale_referenced_by_is_reported() {
        let mut s = demo();
        s.heap[0].referenced_by = vec!["x".into()];
        let v = validate_snapshot(&s);
        assert_eq!(v.len(), 1);
        assert!(v[0].starts_with("heap obj-1: referencedBy"));
    }

    #[test]
    fn finished_thread_must_be_empty() {
        let mut s = demo();
        s.threads.as_mut().unwrap()[0].status = ThreadStatus::Finished;
        assert_eq!(validate_snapshot(&s).len(), 1);
    }
}
