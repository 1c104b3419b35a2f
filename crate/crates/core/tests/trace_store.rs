mod common;

use common::*;
use memtrace_core::snapshot::Dialect;
use memtrace_core::trace::{parse_file_name, Cursor, Direction, Trace, TraceError, TraceMeta, IMPLICIT_FILE, META_FILE};

fn meta() -> TraceMeta {
    TraceMeta { session_id: "s1".into(), dialect: Dialect::Java, source_file: "Sample.java".into() }
}

fn demo_trace(dir: &std::path::Path) -> (Recording, Trace) {
    let rec = record(DEMO, Dialect::Java, &[], TickClock::starting_at(1_700_000_000_000), |_, _| Cmd::Over);
    let mut trace = Trace::create(dir, meta()).unwrap();
    for (s, &i) in rec.snapshots.iter().zip(&rec.implicit) {
        trace.append(s, i).unwrap();
    }
    (rec, trace)
}

/// A step over `f()` passes two statements of `f` and the return into
/// main's line 6.
const CALLEE: &str = "int f() {\n    int a = 1;\n    return a + 2;\n}\nint main() {\n    int r = f();\n    return r;\n}\n";

#[test]
fn first_append_is_step_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (rec, mut trace) = (record(DEMO, Dialect::Java, &[], fixed_clock(), |_, _| Cmd::Over), Trace::create(dir.path(), meta()).unwrap());
    assert_eq!(trace.append(&rec.snapshots[0], false).unwrap(), 0);
    assert_eq!(trace.entries()[0].file_name, "s1-000000-0.snapshot.json");
    assert!(dir.path().join("s1-000000-0.snapshot.json").exists());
}

#[test]
fn files_sort_in_step_order() {
    let dir = tempfile::tempdir().unwrap();
    let (_, trace) = demo_trace(dir.path());
    let mut names: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| parse_file_name(n).is_some())
        .collect();
    names.sort();
    let steps: Vec<_> = names.iter().map(|n| parse_file_name(n).unwrap().1).collect();
    assert_eq!(steps, (0..trace.len()).collect::<Vec<_>>());
}

#[test]
fn gap_is_a_contract_violation() {
    let dir = tempfile::tempdir().unwrap();
    let rec = record(DEMO, Dialect::Java, &[], fixed_clock(), |_, _| Cmd::Over);
    let mut trace = Trace::create(dir.path(), meta()).unwrap();
    for s in &rec.snapshots[..3] {
        trace.append(s, false).unwrap();
    }
    let err = trace.append(&rec.snapshots[5], false).unwrap_err();
    assert!(matches!(err, TraceError::StepGap { expected: 3, got: 5 }));
    assert!(err.to_string().starts_with("contract violation"));
    assert_eq!(trace.len(), 3);
}

#[test]
fn get_returns_what_was_appended() {
    let dir = tempfile::tempdir().unwrap();
    let (rec, trace) = demo_trace(dir.path());
    for (k, s) in rec.snapshots.iter().enumerate() {
        assert_eq!(&trace.get(k as u64).unwrap(), s);
    }
    assert!(matches!(trace.get(trace.len()), Err(TraceError::OutOfRange { .. })));
}

#[test]
fn reopened_trace_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (rec, trace) = demo_trace(dir.path());
    drop(trace);
    let again = Trace::open(dir.path()).unwrap();
    assert_eq!(again.meta(), &meta());
    assert_eq!(again.len() as usize, rec.snapshots.len());
    for (k, s) in rec.snapshots.iter().enumerate() {
        assert_eq!(&again.get(k as u64).unwrap(), s);
        assert_eq!(again.is_implicit(k as u64), rec.implicit[k]);
    }
}

#[test]
fn corrupted_file_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let (_, trace) = demo_trace(dir.path());
    let name = trace.entries()[2].file_name.clone();
    std::fs::write(dir.path().join(&name), "{ not json").unwrap();
    match trace.get(2) {
        Err(TraceError::Corrupt { file, .. }) => assert_eq!(file, name),
        other => panic!("{other:?}"),
    }
}

#[test]
fn missing_step_file_fails_open() {
    let dir = tempfile::tempdir().unwrap();
    let (_, trace) = demo_trace(dir.path());
    std::fs::remove_file(dir.path().join(&trace.entries()[1].file_name)).unwrap();
    assert!(matches!(Trace::open(dir.path()), Err(TraceError::Layout { .. })));
}

#[test]
fn create_refuses_a_used_directory() {
    let dir = tempfile::tempdir().unwrap();
    demo_trace(dir.path());
    assert!(matches!(Trace::create(dir.path(), meta()), Err(TraceError::Layout { .. })));
}

#[test]
fn storage_failure_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    match Trace::create(blocker.join("sub"), meta()) {
        Err(TraceError::Io { path, .. }) => assert!(path.starts_with(&blocker)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn layout_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let rec = record(CALLEE, Dialect::Cpp, &[], fixed_clock(), |_, _| Cmd::Over);
    persist(&rec, dir.path(), Dialect::Cpp);
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join(META_FILE)).unwrap()).unwrap();
    assert_eq!(meta["sessionId"], "corpus");
    assert_eq!(meta["dialect"], "cpp");
    let implicit = std::fs::read_to_string(dir.path().join(IMPLICIT_FILE)).unwrap();
    assert_eq!(implicit, "1\n2\n3\n");
}

#[test]
fn skip_implicit_controls_back_step() {
    let rec = record(CALLEE, Dialect::Cpp, &[], fixed_clock(), |_, _| Cmd::Over);
    assert_eq!(rec.implicit, [false, true, true, true, false, false]);
    assert_eq!(rec.snapshots[3].line_number, 6);
    let dir = tempfile::tempdir().unwrap();
    let trace = persist(&rec, dir.path(), Dialect::Cpp);

    let mut skip = Cursor::new(true);
    skip.jump(&trace, 4).unwrap();
    assert_eq!(skip.back_step(&trace).unwrap(), rec.snapshots[0]);
    assert_eq!(skip.forward_step(&trace).unwrap(), rec.snapshots[4]);

    let mut all = Cursor::new(false);
    all.jump(&trace, 4).unwrap();
    assert_eq!(all.back_step(&trace).unwrap(), rec.snapshots[3]);
    assert_eq!(all.position(), 3);
}

#[test]
fn boundary_leaves_cursor_alone() {
    let dir = tempfile::tempdir().unwrap();
    let (_, trace) = demo_trace(dir.path());
    let mut c = Cursor::new(true);
    let err = c.back_step(&trace).unwrap_err();
    assert!(matches!(err, TraceError::Boundary { position: 0, direction: Direction::Backward }));
    assert_eq!(c.position(), 0);
    c.jump_to_latest(&trace).unwrap();
    assert!(c.is_at_latest(&trace));
    assert!(c.forward_step(&trace).is_err());
    assert!(c.is_at_latest(&trace));
    assert!(c.jump(&trace, 99).is_err());
    assert!(c.is_at_latest(&trace));
}

#[test]
fn forward_then_back_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let (_, trace) = demo_trace(dir.path());
    let mut c = Cursor::new(false);
    for k in 0..trace.len() - 1 {
        let here = c.jump(&trace, k).unwrap();
        c.forward_step(&trace).unwrap();
        assert_eq!(c.back_step(&trace).unwrap(), here);
        assert_eq!(c.position(), k);
    }
}
