//! Shared fixtures, generators and independent oracles for the
//! integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use memtrace_core::analysis::{
    annotate_heap_names, diff_base, step_view, FieldPath, LayoutPrefs, SnapshotDiff, VarPath,
};
use memtrace_core::microvm::{parse_program, Breakpoint, DebugSession, StepOutcome};
use memtrace_core::snapshot::{
    Dialect, HeapObject, Snapshot, StackFrame, ThreadState, ThreadStatus, Value, VariableKind,
    VariableRecord,
};
use memtrace_core::trace::{Trace, TraceMeta};
use memtrace_core::{Clock, FixedClock};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEMO: &str = include_str!("../corpus/demo.java");
pub const DEMO_GOLDEN: &str = include_str!("../golden/demo_breakpoint.snapshot.json");
pub const DEMO_BREAKPOINT: u32 = 10;

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus")
}

pub struct CorpusProgram {
    pub name: String,
    pub dialect: Dialect,
    pub source: String,
}

/// Every program under tests/corpus, dialect taken from the extension.
pub fn corpus() -> Vec<CorpusProgram> {
    let mut out: Vec<_> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter_map(|p| {
            let dialect = match p.extension()?.to_str()? {
                "java" => Dialect::Java,
                "cpp" => Dialect::Cpp,
                _ => return None,
            };
            Some(CorpusProgram {
                name: p.file_name()?.to_string_lossy().into_owned(),
                dialect,
                source: std::fs::read_to_string(&p).unwrap(),
            })
        })
        .collect();
    out.sort_by(|a, b| a.name.cmp(&b.name));
    out
}

/// Clock that ticks once per reading, so timestamps differ between runs
/// started from different bases.
pub struct TickClock(AtomicU64);

impl TickClock {
    pub fn starting_at(ms: u64) -> Arc<Self> {
        Arc::new(TickClock(AtomicU64::new(ms)))
    }
}

impl Clock for TickClock {
    fn now_ms(&self) -> u64 {
        self.0.fetch_add(1, Ordering::Relaxed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmd {
    Run,
    Into,
    Over,
    Return,
}

pub fn apply(session: &mut DebugSession, cmd: Cmd) -> StepOutcome {
    match cmd {
        Cmd::Run => session.run_to_breakpoint(),
        Cmd::Into => session.step_into(),
        Cmd::Over => session.step_over(),
        Cmd::Return => session.step_return(),
    }
    .unwrap()
}

/// Every snapshot of one run, with the implicit flags the trace would get.
#[derive(Debug, Clone)]
pub struct Recording {
    pub snapshots: Vec<Snapshot>,
    pub implicit: Vec<bool>,
    /// `(command, index of the snapshot it was issued at, index of its stop)`
    pub commands: Vec<(Cmd, usize, usize)>,
}

pub fn start(source: &str, dialect: Dialect, breakpoints: &[u32], clock: Arc<dyn Clock>) -> (DebugSession, Snapshot) {
    let program = Arc::new(parse_program(source, dialect).unwrap());
    let bps: Vec<_> = breakpoints.iter().copied().map(Breakpoint::at).collect();
    DebugSession::start(program, &bps, clock).unwrap()
}

/// Drives a session with `pick` until it ends (or 5000 commands).
pub fn record(
    source: &str,
    dialect: Dialect,
    breakpoints: &[u32],
    clock: Arc<dyn Clock>,
    mut pick: impl FnMut(&DebugSession, &Snapshot) -> Cmd,
) -> Recording {
    let (mut session, first) = start(source, dialect, breakpoints, clock);
    let mut rec = Recording { snapshots: vec![first], implicit: vec![false], commands: Vec::new() };
    while session.is_live() && rec.commands.len() < 5000 {
        let at = rec.snapshots.len() - 1;
        let cmd = pick(&session, &rec.snapshots[at]);
        let out = apply(&mut session, cmd);
        for s in out.implicit {
            rec.snapshots.push(s);
            rec.implicit.push(true);
        }
        rec.snapshots.push(out.stop);
        rec.implicit.push(false);
        rec.commands.push((cmd, at, rec.snapshots.len() - 1));
    }
    rec
}

/// A reproducible mixed stepping script.
pub fn scripted(seed: u64) -> impl FnMut(&DebugSession, &Snapshot) -> Cmd {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    move |_, _| match rng.gen_range(0..10) {
        0..=3 => Cmd::Into,
        4..=7 => Cmd::Over,
        8 => Cmd::Return,
        _ => Cmd::Run,
    }
}

pub fn persist(rec: &Recording, dir: &Path, dialect: Dialect) -> Trace {
    let meta = TraceMeta {
        session_id: "corpus".into(),
        dialect,
        source_file: "program".into(),
    };
    let mut trace = Trace::create(dir, meta).unwrap();
    for (s, &implicit) in rec.snapshots.iter().zip(&rec.implicit) {
        trace.append(s, implicit).unwrap();
    }
    trace
}

/// View documents for every step, computed from in-memory snapshots.
pub fn views_live(rec: &Recording, skip_implicit: bool, prefs: &LayoutPrefs) -> Vec<String> {
    (0..rec.snapshots.len())
        .map(|k| {
            let base = diff_base(k as u64, skip_implicit, |s| rec.implicit[s as usize]);
            let (view, _) = step_view(&rec.snapshots[k], base.map(|b| &rec.snapshots[b as usize]), prefs);
            view.to_json()
        })
        .collect()
}

/// Same as [`views_live`], but reading everything back from a trace.
pub fn views_replayed(trace: &Trace, skip_implicit: bool, prefs: &LayoutPrefs) -> Vec<String> {
    (0..trace.len())
        .map(|k| {
            let base = diff_base(k, skip_implicit, |s| trace.is_implicit(s));
            let base = base.map(|b| trace.get(b).unwrap());
            let (view, _) = step_view(&trace.get(k).unwrap(), base.as_ref(), prefs);
            view.to_json()
        })
        .collect()
}

pub fn without_timestamp(s: &Snapshot) -> Snapshot {
    Snapshot { timestamp: 0, ..s.clone() }
}

// ---- random snapshots ----

const TEXT_POOL: &[&str] = &["", "Hello", "a\"b", "back\\slash", "tab\tnew\nline", "\u{0}\u{1f}", "é✓😀", "{\"ref\":\"x\"}"];
const CHAR_POOL: &[char] = &['a', 'Z', '\0', '\n', '"', '\\', '\'', 'é', '😀'];

fn hex(n: u64) -> String {
    format!("{n:#018x}")
}

fn random_scalar(rng: &mut ChaCha8Rng, dialect: Dialect) -> Value {
    match rng.gen_range(0..7) {
        0 => Value::Int(rng.gen_range(-1_000_000_000_000i64..1_000_000_000_000)),
        1 => Value::Int(rng.gen_range(-3..4)),
        2 => Value::Char(*CHAR_POOL.choose(rng).unwrap()),
        3 => Value::Str(TEXT_POOL.choose(rng).unwrap().to_string()),
        4 => Value::Bool(rng.gen()),
        5 if dialect == Dialect::Cpp => {
            if rng.gen() {
                Value::Uninit
            } else {
                Value::Address(hex(0x7fff_ffff_0000 - 8 * rng.gen_range(0..64)))
            }
        }
        _ => Value::Null,
    }
}

fn random_value(rng: &mut ChaCha8Rng, dialect: Dialect, ids: &[String]) -> Value {
    if !ids.is_empty() && rng.gen_bool(0.55) {
        Value::Ref(ids.choose(rng).unwrap().clone())
    } else {
        random_scalar(rng, dialect)
    }
}

/// A valid snapshot with a random object graph of up to 50 objects and up
/// to 10 stack/global roots.
pub fn random_snapshot(rng: &mut ChaCha8Rng) -> Snapshot {
    let dialect = if rng.gen() { Dialect::Java } else { Dialect::Cpp };
    let n_objects = rng.gen_range(0..=50);
    let ids: Vec<String> = (0..n_objects)
        .map(|k| match dialect {
            Dialect::Java => format!("obj-{}", k + 1),
            Dialect::Cpp => hex(0x100_0000 + 32 * k as u64),
        })
        .collect();

    let heap = ids
        .iter()
        .enumerate()
        .map(|(k, id)| {
            let n_fields = rng.gen_range(0..4);
            let fields = (0..n_fields)
                .map(|f| VariableRecord {
                    name: format!("f{f}"),
                    declared_type: "Node".into(),
                    value: random_value(rng, dialect, &ids),
                    address: (dialect == Dialect::Cpp && rng.gen()).then(|| hex(0x100_0000 + 32 * k as u64 + 8 * f)),
                    kind: VariableKind::Field,
                })
                .collect();
            HeapObject { id: id.clone(), runtime_type: format!("T{}", k % 3), fields, referenced_by: vec![] }
        })
        .collect();

    let mut roots = rng.gen_range(0..=10);
    let finished = dialect == Dialect::Java && rng.gen_bool(0.1);
    let n_frames = if finished { 0 } else { rng.gen_range(1..5) };
    let mut slot = 0u64;
    let mut var = |rng: &mut ChaCha8Rng, name: String, kind: VariableKind| {
        slot += 1;
        VariableRecord {
            name,
            declared_type: ["int", "Node", "java.lang.String", "char*"].choose(rng).unwrap().to_string(),
            value: random_value(rng, dialect, &ids),
            address: (dialect == Dialect::Cpp).then(|| hex(0x7fff_ffff_0000 - 8 * slot)),
            kind,
        }
    };
    let mut frames = Vec::new();
    for index in 0..n_frames {
        let n_args = rng.gen_range(0..=roots.min(2));
        roots -= n_args;
        let n_locals = rng.gen_range(0..=roots.min(4));
        roots -= n_locals;
        frames.push(StackFrame {
            function_name: ["main", "f", "g"][rng.gen_range(0..3)].to_string(),
            frame_index: index,
            line_number: rng.gen_range(1..200),
            arguments: (0..n_args).map(|i| var(rng, format!("p{i}"), VariableKind::Argument)).collect(),
            locals: (0..n_locals).map(|i| var(rng, format!("v{i}"), VariableKind::Local)).collect(),
        });
    }
    let globals: Vec<_> = (0..roots).map(|i| var(rng, format!("g{i}"), VariableKind::Global)).collect();

    let mut s = Snapshot {
        language: dialect,
        step_index: rng.gen_range(0..100_000),
        line_number: rng.gen_range(1..200),
        threads: None,
        stack: None,
        heap,
        global_static_variables: None,
        fault: rng.gen_bool(0.1).then(|| "null dereference at line 3".to_string()),
        timestamp: rng.gen(),
    };
    match dialect {
        Dialect::Java => {
            let status = if frames.is_empty() { ThreadStatus::Finished } else { ThreadStatus::Paused };
            s.threads = Some(vec![ThreadState { name: "main".into(), status, stack: frames }]);
        }
        Dialect::Cpp => {
            s.stack = Some(frames);
            s.global_static_variables = Some(globals);
        }
    }
    annotate_heap_names(&s)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---- oracles ----

/// Plain breadth-first search over the object graph from every root.
pub fn bfs_oracle(s: &Snapshot) -> BTreeSet<String> {
    let mut edges: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for o in &s.heap {
        let targets = o
            .fields
            .iter()
            .filter_map(|f| if let Value::Ref(t) = &f.value { Some(t.as_str()) } else { None })
            .collect();
        edges.insert(o.id.as_str(), targets);
    }
    let mut roots = Vec::new();
    for f in s.frames() {
        for v in f.arguments.iter().chain(&f.locals) {
            roots.push(&v.value);
        }
    }
    if let Some(globals) = &s.global_static_variables {
        roots.extend(globals.iter().map(|g| &g.value));
    }
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    for r in roots {
        if let Value::Ref(id) = r {
            queue.push_back(id.as_str());
        }
    }
    while let Some(id) = queue.pop_front() {
        if !edges.contains_key(id) || !seen.insert(id.to_string()) {
            continue;
        }
        queue.extend(edges[id].iter().copied());
    }
    seen
}

/// Field-by-field comparison of two states, written without the library's
/// frame matching helpers.
pub fn diff_oracle(prev: &Snapshot, curr: &Snapshot) -> SnapshotDiff {
    fn flatten(s: &Snapshot) -> BTreeMap<(String, String), Value> {
        let frames = s.frames();
        let mut out = BTreeMap::new();
        for (pos, f) in frames.iter().enumerate() {
            let key = format!("{}#{}", f.function_name, frames.len() - 1 - pos);
            for v in f.arguments.iter().chain(&f.locals) {
                out.insert((key.clone(), v.name.clone()), v.value.clone());
            }
        }
        for g in s.global_static_variables.iter().flatten() {
            out.insert(("globals".to_string(), g.name.clone()), g.value.clone());
        }
        out
    }
    fn frame_keys(s: &Snapshot) -> BTreeSet<String> {
        let n = s.frames().len();
        s.frames().iter().enumerate().map(|(p, f)| format!("{}#{}", f.function_name, n - 1 - p)).collect()
    }

    let mut d = SnapshotDiff::default();
    let before = flatten(prev);
    let present: BTreeSet<String> = frame_keys(prev);
    for ((frame, name), value) in flatten(curr) {
        match before.get(&(frame.clone(), name.clone())) {
            None => {
                d.created_variables.insert(VarPath::new(frame, name));
            }
            Some(old) if *old != value => {
                d.changed_variables.insert(VarPath::new(frame, name));
            }
            _ => {}
        }
    }
    d.removed_frames = present.difference(&frame_keys(curr)).count();
    for o in &curr.heap {
        let Some(old) = prev.heap.iter().find(|p| p.id == o.id) else {
            d.created_objects.insert(o.id.clone());
            continue;
        };
        for f in &o.fields {
            let was = old.fields.iter().find(|x| x.name == f.name).map(|x| &x.value);
            if was != Some(&f.value) {
                d.changed_objects.insert(FieldPath::new(&o.id, &f.name));
            }
        }
    }
    d
}

/// Whether source line `line` calls a user function, judged from the text:
/// an identifier directly followed by `(` that is not a keyword, a
/// constructor after `new`, or a builtin.
pub fn line_has_call(source: &str, line: u32) -> bool {
    let text = source.lines().nth(line as usize - 1).unwrap_or("");
    let code = strip_literals(text.split("//").next().unwrap());
    let bytes = code.as_bytes();
    let mut words: Vec<(String, usize)> = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_alphabetic() || bytes[i] == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            words.push((code[start..i].to_string(), i));
        } else {
            i += 1;
        }
    }
    words.iter().enumerate().any(|(k, (w, end))| {
        let next = code[*end..].trim_start().starts_with('(');
        let after_new = k > 0 && words[k - 1].0 == "new";
        let builtin = ["if", "while", "for", "return", "sizeof", "malloc", "switch"].contains(&w.as_str());
        next && !after_new && !builtin
    })
}

fn strip_literals(s: &str) -> String {
    let mut out = String::new();
    let mut quote = None;
    let mut escaped = false;
    for c in s.chars() {
        match quote {
            Some(q) => {
                if escaped {
                    escaped = false;
                } else if c == '\\' {
                    escaped = true;
                } else if c == q {
                    quote = None;
                    out.push(c);
                }
            }
            None => {
                if c == '"' || c == '\'' {
                    quote = Some(c);
                }
                out.push(c);
            }
        }
    }
    out
}

// ---- checks shared by the property tests and the acceptance report ----

pub type Check = Result<String, String>;

pub fn fixed_clock() -> Arc<dyn Clock> {
    Arc::new(FixedClock(0))
}
