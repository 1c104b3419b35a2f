mod common;

use common::*;
use memtrace_core::analysis::{reachable_heap, LayoutPrefs};
use memtrace_core::snapshot::{parse_snapshot, serialize_snapshot, validate_snapshot, Dialect};
use memtrace_core::{Clock, FixedClock};
use std::collections::BTreeSet;
use std::sync::Arc;

#[test]
fn demo_breakpoint_matches_golden_text() {
    let (mut s, _) = start(DEMO, Dialect::Java, &[DEMO_BREAKPOINT], fixed_clock());
    let snap = s.run_to_breakpoint().unwrap().stop;
    assert_eq!(serialize_snapshot(&snap), DEMO_GOLDEN.trim_end());
}

#[test]
fn golden_round_trips() {
    let snap = parse_snapshot(DEMO_GOLDEN).unwrap();
    assert_eq!(serialize_snapshot(&snap), DEMO_GOLDEN.trim_end());
    assert!(validate_snapshot(&snap).is_empty());
    assert!(DEMO_GOLDEN.contains("\"name\": \"a\",\n              \"type\": \"int\",\n              \"value\": 5,"));
}

#[test]
fn demo_reachable_objects() {
    let snap = parse_snapshot(DEMO_GOLDEN).unwrap();
    let want: BTreeSet<String> = ["obj-1", "obj-2"].map(String::from).into();
    assert_eq!(reachable_heap(&snap), want);
    assert_eq!(snap.object("obj-1").unwrap().referenced_by, ["obj"]);
    assert_eq!(snap.object("obj-2").unwrap().referenced_by, ["s"]);
}

#[test]
fn six_step_overs_reach_the_breakpoint_state() {
    let (mut s, _) = start(DEMO, Dialect::Java, &[], fixed_clock());
    let snap = (0..6).map(|_| s.step_over().unwrap().stop).last().unwrap();
    assert_eq!(snap, parse_snapshot(DEMO_GOLDEN).unwrap());
}

#[test]
fn timestamps_are_the_only_clock_dependency() {
    let (mut a, _) = start(DEMO, Dialect::Java, &[10], Arc::new(FixedClock(5)));
    let (mut b, _) = start(DEMO, Dialect::Java, &[10], Arc::new(FixedClock(7)) as Arc<dyn Clock>);
    let (x, y) = (a.run_to_breakpoint().unwrap().stop, b.run_to_breakpoint().unwrap().stop);
    let (tx, ty) = (serialize_snapshot(&x), serialize_snapshot(&y));
    assert_ne!(tx, ty);
    assert_eq!(tx.replace("\"timestamp\": 5", ""), ty.replace("\"timestamp\": 7", ""));
}

/// Every snapshot in every corpus run satisfies the VM's stated invariants.
#[test]
fn corpus_runs_keep_invariants() {
    for (seed, p) in corpus().iter().enumerate() {
        let rec = record(&p.source, p.dialect, &[], fixed_clock(), scripted(seed as u64 + 300));
        let mut max_id: Option<String> = None;
        for (k, s) in rec.snapshots.iter().enumerate() {
            assert_eq!(s.step_index, k as u64, "{}", p.name);
            let v = validate_snapshot(s);
            assert!(v.is_empty(), "{} step {k}: {v:?}", p.name);
            assert_eq!(parse_snapshot(&serialize_snapshot(s)).unwrap(), *s);
            // identities only grow, in allocation order
            let ids: Vec<_> = s.heap.iter().map(|o| o.id.clone()).collect();
            let mut sorted = ids.clone();
            sorted.sort_by_key(|id| id_number(id));
            assert_eq!(ids, sorted, "{}", p.name);
            if let (Some(prev), Some(last)) = (&max_id, ids.last()) {
                assert!(id_number(last) >= id_number(prev));
            }
            max_id = ids.last().cloned().or(max_id);
        }
        for w in rec.snapshots.windows(2) {
            let (before, after) = (w[0].frames(), w[1].frames());
            if w[1].fault.is_some() {
                continue;
            }
            let d = after.len() as i64 - before.len() as i64;
            assert!(d.abs() <= 1, "{}: depth {} -> {}", p.name, before.len(), after.len());
            let names = |fs: &[memtrace_core::snapshot::StackFrame]| fs.iter().map(|f| f.function_name.clone()).collect::<Vec<_>>();
            match d {
                // a push keeps every older frame below the new top
                1 => assert_eq!(names(&after[1..]), names(before), "{}", p.name),
                // a pop removes exactly the previous top
                -1 => assert_eq!(names(after), names(&before[1..]), "{}", p.name),
                _ => {}
            }
        }
        let prefs = LayoutPrefs::default();
        assert_eq!(views_live(&rec, true, &prefs), views_live(&rec, true, &prefs));
    }
}

fn id_number(id: &str) -> u64 {
    match id.strip_prefix("obj-") {
        Some(n) => n.parse().unwrap(),
        None => u64::from_str_radix(id.trim_start_matches("0x"), 16).unwrap(),
    }
}
