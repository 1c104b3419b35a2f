//! Bytecode interpreter that pauses at statement boundaries.

use std::sync::Arc;

use super::ast::BinOp;
use super::program::{Const, Instr, Program, Ty};
use crate::analysis::annotate_heap_names;
use crate::snapshot::{
    Dialect, HeapObject, Snapshot, StackFrame, ThreadState, ThreadStatus, Value, VariableKind,
    VariableRecord,
};

/// First stack slot address; slots grow downward.
pub const STACK_TOP: u64 = 0x0000_7fff_ffff_0000;
/// First heap address; allocations grow upward, 16-byte aligned.
pub const HEAP_BASE: u64 = 0x0000_0000_0100_0000;
/// Static data segment for cpp globals.
pub const GLOBALS_BASE: u64 = 0x0000_0000_0060_1000;

const WORD: u64 = 8;
/// Return address and saved frame pointer between frames.
const FRAME_LINKAGE: u64 = 16;
const MAX_CALL_DEPTH: usize = 256;

pub(crate) fn hex_address(addr: u64) -> String {
    format!("{addr:#018x}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Location {
    Local { frame: u64, slot: u16, addr: u64 },
    Global { index: u16, addr: u64 },
}

impl Location {
    fn addr(&self) -> u64 {
        match self {
            Location::Local { addr, .. } | Location::Global { addr, .. } => *addr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum RtValue {
    Int(i32),
    Char(char),
    Bool(bool),
    Str(Arc<str>),
    Null,
    Ref(usize),
    Addr(Location),
    Uninit,
}

impl From<&Const> for RtValue {
    fn from(c: &Const) -> Self {
        match c {
            Const::Int(n) => RtValue::Int(*n),
            Const::Char(c) => RtValue::Char(*c),
            Const::Bool(b) => RtValue::Bool(*b),
            Const::Str(s) => RtValue::Str(s.clone()),
            Const::Null => RtValue::Null,
            Const::Uninit => RtValue::Uninit,
        }
    }
}

#[derive(Debug, Clone)]
enum ObjectShape {
    Record(usize),
    Scalar(Ty),
    JavaString,
}

#[derive(Debug, Clone)]
struct HeapCell {
    label: String,
    addr: u64,
    shape: ObjectShape,
    fields: Vec<RtValue>,
}

#[derive(Debug, Clone)]
struct Frame {
    function: usize,
    id: u64,
    pc: usize,
    line: u32,
    base: u64,
    slots: Vec<Option<RtValue>>,
    operands: Vec<RtValue>,
}

impl Frame {
    fn slot_addr(&self, slot: u16) -> u64 {
        self.base - WORD * u64::from(slot)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VmStatus {
    Paused,
    Finished,
    Faulted,
}

/// Result of running to the next pause point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    /// At the start of a statement.
    Paused,
    /// Back in a caller that is still in the middle of its statement.
    Returned,
    Finished,
    Fault(String),
}

/// Complete machine state: call stack, heap, globals and allocators.
#[derive(Debug, Clone)]
pub struct VmState {
    program: Arc<Program>,
    frames: Vec<Frame>,
    heap: Vec<HeapCell>,
    globals: Vec<RtValue>,
    next_object_counter: u64,
    next_address: u64,
    next_frame_id: u64,
    current_line: u32,
    status: VmStatus,
    fault: Option<String>,
}

impl VmState {
    /// Fresh machine paused before the first statement of `main`.
    pub fn new(program: Arc<Program>) -> Self {
        let globals = program.globals.iter().map(|g| RtValue::from(&g.init)).collect();
        let mut vm = VmState {
            frames: Vec::new(),
            heap: Vec::new(),
            globals,
            next_object_counter: 1,
            next_address: HEAP_BASE,
            next_frame_id: 0,
            current_line: 1,
            status: VmStatus::Paused,
            fault: None,
            program: program.clone(),
        };
        let entry = program.entry;
        let mut args = Vec::new();
        if program.functions[entry].param_count == 1 {
            // java `String[] args` is bound to null.
            args.push(RtValue::Null);
        }
        vm.push_frame(entry, args);
        vm.settle();
        vm
    }

    pub fn program(&self) -> &Arc<Program> {
        &self.program
    }

    pub fn status(&self) -> VmStatus {
        self.status
    }

    pub fn depth(&self) -> usize {
        self.frames.len()
    }

    pub fn current_line(&self) -> u32 {
        self.current_line
    }

    pub fn fault(&self) -> Option<&str> {
        self.fault.as_deref()
    }

    fn push_frame(&mut self, function: usize, args: Vec<RtValue>) {
        let func = &self.program.functions[function];
        let base = match self.frames.last() {
            None => STACK_TOP,
            Some(caller) => {
                let caller_slots = self.program.functions[caller.function].slots.len() as u64;
                caller.base - WORD * caller_slots - FRAME_LINKAGE
            }
        };
        let mut slots = vec![None; func.slots.len()];
        for (slot, v) in slots.iter_mut().zip(args) {
            *slot = Some(v);
        }
        self.frames.push(Frame {
            function,
            id: self.next_frame_id,
            pc: 0,
            line: func.line,
            base,
            slots,
            operands: Vec::new(),
        });
        self.next_frame_id += 1;
    }

    /// Moves the top frame's line onto the boundary it is paused at.
    fn settle(&mut self) {
        if let Some(frame) = self.frames.last_mut() {
            if let Some(Instr::Stmt(line)) = self.program.functions[frame.function].code.get(frame.pc) {
                frame.line = *line;
                self.current_line = *line;
            }
        }
    }

    /// Executes the statement at the current boundary and everything up to
    /// the next boundary in any frame. A return into a caller that has not
    /// finished its statement also pauses, so the stack never shrinks by
    /// more than one frame between two pauses.
    pub fn advance(&mut self) -> Event {
        if self.status != VmStatus::Paused {
            return match &self.fault {
                Some(f) => Event::Fault(f.clone()),
                None => Event::Finished,
            };
        }
        // Paused on a boundary: step past it. After a mid-statement return
        // there is none to skip.
        let mut first = true;
        if let Some(frame) = self.frames.last() {
            first = matches!(self.program.functions[frame.function].code[frame.pc], Instr::Stmt(_));
        }
        loop {
            let Some(frame) = self.frames.last() else {
                self.status = VmStatus::Finished;
                return Event::Finished;
            };
            let program = self.program.clone();
            let instr = &program.functions[frame.function].code[frame.pc];
            if let Instr::Stmt(_) = instr {
                if !first {
                    self.settle();
                    return Event::Paused;
                }
                first = false;
                self.frames.last_mut().expect("frame").pc += 1;
                continue;
            }
            let returning = matches!(instr, Instr::Return | Instr::ReturnVoid);
            if let Err(msg) = self.exec(instr) {
                let msg = format!("{msg} at line {}", self.current_line);
                self.status = VmStatus::Faulted;
                self.fault = Some(msg.clone());
                return Event::Fault(msg);
            }
            if returning {
                if let Some(caller) = self.frames.last() {
                    let next = &program.functions[caller.function].code[caller.pc];
                    if !matches!(next, Instr::Stmt(_)) {
                        return Event::Returned;
                    }
                }
            }
        }
    }

    fn top(&mut self) -> &mut Frame {
        self.frames.last_mut().expect("active frame")
    }

    fn pop(&mut self) -> RtValue {
        self.top().operands.pop().expect("operand stack underflow")
    }

    fn push(&mut self, v: RtValue) {
        self.top().operands.push(v);
    }

    fn alloc(&mut self, shape: ObjectShape, fields: Vec<RtValue>) -> usize {
        let size = (WORD * fields.len() as u64).div_ceil(16).max(1) * 16;
        let addr = self.next_address;
        self.next_address += size;
        let label = match self.program.dialect {
            Dialect::Java => format!("obj-{}", self.next_object_counter),
            Dialect::Cpp => hex_address(addr),
        };
        self.next_object_counter += 1;
        self.heap.push(HeapCell { label, addr, shape, fields });
        self.heap.len() - 1
    }

    fn object_ref(&self, v: RtValue) -> Result<usize, String> {
        match v {
            RtValue::Ref(i) => Ok(i),
            RtValue::Null => Err("null dereference".into()),
            RtValue::Uninit => Err("use of uninitialized pointer".into()),
            other => Err(format!("invalid object reference {other:?}")),
        }
    }

    fn exec(&mut self, instr: &Instr) -> Result<(), String> {
        self.top().pc += 1;
        match instr {
            Instr::Stmt(_) => unreachable!("handled by advance"),
            Instr::Const(c) => self.push(c.into()),
            Instr::NewString(s) => {
                let obj = self.alloc(ObjectShape::JavaString, vec![RtValue::Str(s.clone())]);
                self.push(RtValue::Ref(obj));
            }
            Instr::Load(slot) => {
                let v = self.top().slots[*slot as usize].clone().expect("checked: slot in scope");
                self.push(v);
            }
            Instr::Store(slot) | Instr::Declare(slot) => {
                let v = self.pop();
                let v = self.coerce_to_slot(*slot, v);
                self.top().slots[*slot as usize] = Some(v);
            }
            Instr::EndScope(slots) => {
                for s in slots {
                    self.top().slots[*s as usize] = None;
                }
            }
            Instr::LoadGlobal(g) => {
                let v = self.globals[*g as usize].clone();
                self.push(v);
            }
            Instr::StoreGlobal(g) => {
                let v = self.pop();
                let v = coerce(v, &self.program.globals[*g as usize].ty);
                self.globals[*g as usize] = v;
            }
            Instr::AddrLocal(slot) => {
                let frame = self.top();
                let loc = Location::Local { frame: frame.id, slot: *slot, addr: frame.slot_addr(*slot) };
                self.push(RtValue::Addr(loc));
            }
            Instr::AddrGlobal(g) => {
                let loc = Location::Global { index: *g, addr: GLOBALS_BASE + WORD * u64::from(*g) };
                self.push(RtValue::Addr(loc));
            }
            Instr::GetField(idx) => {
                let obj = self.pop();
                let obj = self.object_ref(obj)?;
                let v = self.heap[obj].fields[*idx as usize].clone();
                self.push(v);
            }
            Instr::SetField(idx) => {
                let v = self.pop();
                let obj = self.pop();
                let obj = self.object_ref(obj)?;
                let v = match &self.heap[obj].shape {
                    ObjectShape::Record(r) => coerce(v, &self.program.records[*r].fields[*idx as usize].ty),
                    _ => v,
                };
                self.heap[obj].fields[*idx as usize] = v;
            }
            Instr::Deref => {
                let p = self.pop();
                let v = match p {
                    RtValue::Addr(loc) => self.read_location(&loc)?,
                    other => {
                        let obj = self.object_ref(other)?;
                        self.heap[obj].fields[0].clone()
                    }
                };
                self.push(v);
            }
            Instr::StoreDeref => {
                let v = self.pop();
                let p = self.pop();
                match p {
                    RtValue::Addr(loc) => self.write_location(&loc, v)?,
                    other => {
                        let obj = self.object_ref(other)?;
                        let v = match &self.heap[obj].shape {
                            ObjectShape::Scalar(t) => coerce(v, t),
                            _ => v,
                        };
                        self.heap[obj].fields[0] = v;
                    }
                }
            }
            Instr::NewRecord { record, zeroed } => {
                let fields = self.program.records[*record]
                    .fields
                    .iter()
                    .map(|f| if *zeroed { zero_value(&f.ty) } else { RtValue::Uninit })
                    .collect();
                let obj = self.alloc(ObjectShape::Record(*record), fields);
                self.push(RtValue::Ref(obj));
            }
            Instr::NewScalar { ty, zeroed } => {
                let field = if *zeroed { zero_value(ty) } else { RtValue::Uninit };
                let obj = self.alloc(ObjectShape::Scalar(ty.clone()), vec![field]);
                self.push(RtValue::Ref(obj));
            }
            Instr::Binary(op) => {
                let r = self.pop();
                let l = self.pop();
                let v = binary(*op, l, r)?;
                self.push(v);
            }
            Instr::Neg => {
                let v = self.pop();
                let n = as_int(&v)?;
                self.push(RtValue::Int(n.wrapping_neg()));
            }
            Instr::Not => {
                let v = self.pop();
                let b = as_bool(&v)?;
                self.push(RtValue::Bool(!b));
            }
            Instr::Dup => {
                let v = self.top().operands.last().cloned().expect("operand");
                self.push(v);
            }
            Instr::Pop => {
                self.pop();
            }
            Instr::Jump(t) => self.top().pc = *t,
            Instr::JumpIfFalse(t) => {
                let v = self.pop();
                if !as_bool(&v)? {
                    self.top().pc = *t;
                }
            }
            Instr::JumpIfTrue(t) => {
                let v = self.pop();
                if as_bool(&v)? {
                    self.top().pc = *t;
                }
            }
            Instr::Call { function, argc } => {
                if self.frames.len() >= MAX_CALL_DEPTH {
                    return Err("stack overflow".into());
                }
                let at = self.top().operands.len() - argc;
                let args: Vec<RtValue> = self.top().operands.drain(at..).collect();
                let params = &self.program.functions[*function].slots;
                let args = args.into_iter().zip(params).map(|(a, p)| coerce(a, &p.ty)).collect();
                self.push_frame(*function, args);
            }
            Instr::Return => {
                let v = self.pop();
                let f = self.top().function;
                let ret = self.program.functions[f].ret.clone();
                self.frames.pop();
                if !self.frames.is_empty() {
                    self.push(coerce(v, &ret));
                }
                self.resume_caller_line();
            }
            Instr::ReturnVoid => {
                self.frames.pop();
                self.resume_caller_line();
            }
            Instr::MissingReturn => {
                let f = self.top().function;
                let name = self.program.functions[f].name.clone();
                return Err(format!("function `{name}` ended without returning a value"));
            }
        }
        Ok(())
    }

    // Faults raised after a return belong to the caller's statement.
    fn resume_caller_line(&mut self) {
        if let Some(caller) = self.frames.last() {
            self.current_line = caller.line;
        }
    }

    fn coerce_to_slot(&mut self, slot: u16, v: RtValue) -> RtValue {
        let function = self.top().function;
        coerce(v, &self.program.functions[function].slots[slot as usize].ty)
    }

    fn find_local(&self, frame: u64, slot: u16) -> Result<(usize, usize), String> {
        let pos = self
            .frames
            .iter()
            .position(|f| f.id == frame)
            .ok_or_else(|| "dangling pointer dereference".to_string())?;
        if self.frames[pos].slots[slot as usize].is_none() {
            return Err("dangling pointer dereference".into());
        }
        Ok((pos, slot as usize))
    }

    fn read_location(&self, loc: &Location) -> Result<RtValue, String> {
        match loc {
            Location::Local { frame, slot, .. } => {
                let (f, s) = self.find_local(*frame, *slot)?;
                Ok(self.frames[f].slots[s].clone().expect("live slot"))
            }
            Location::Global { index, .. } => Ok(self.globals[*index as usize].clone()),
        }
    }

    fn write_location(&mut self, loc: &Location, v: RtValue) -> Result<(), String> {
        match loc {
            Location::Local { frame, slot, .. } => {
                let (f, s) = self.find_local(*frame, *slot)?;
                let ty = self.program.functions[self.frames[f].function].slots[s].ty.clone();
                self.frames[f].slots[s] = Some(coerce(v, &ty));
            }
            Location::Global { index, .. } => {
                let ty = self.program.globals[*index as usize].ty.clone();
                self.globals[*index as usize] = coerce(v, &ty);
            }
        }
        Ok(())
    }

    fn value(&self, v: &RtValue) -> Value {
        match v {
            RtValue::Int(n) => Value::Int(i64::from(*n)),
            RtValue::Char(c) => Value::Char(*c),
            RtValue::Bool(b) => Value::Bool(*b),
            RtValue::Str(s) => Value::Str(s.to_string()),
            RtValue::Null => Value::Null,
            RtValue::Ref(i) => Value::Ref(self.heap[*i].label.clone()),
            RtValue::Addr(loc) => Value::Address(hex_address(loc.addr())),
            RtValue::Uninit => Value::Uninit,
        }
    }

    /// Captures the complete machine state as a snapshot.
    pub fn capture_state(&self, step_index: u64, timestamp: u64) -> Snapshot {
        let program = &self.program;
        let dialect = program.dialect;
        let cpp = dialect == Dialect::Cpp;
        let depth = self.frames.len();
        let frames: Vec<StackFrame> = self
            .frames
            .iter()
            .rev()
            .enumerate()
            .map(|(frame_index, frame)| {
                let func = &program.functions[frame.function];
                let mut arguments = Vec::new();
                let mut locals = Vec::new();
                for (slot, value) in frame.slots.iter().enumerate() {
                    let Some(value) = value else { continue };
                    let info = &func.slots[slot];
                    let is_arg = slot < func.param_count;
                    let record = VariableRecord {
                        name: info.name.clone(),
                        declared_type: info.type_text.clone(),
                        value: self.value(value),
                        address: cpp.then(|| hex_address(frame.slot_addr(slot as u16))),
                        kind: if is_arg { VariableKind::Argument } else { VariableKind::Local },
                    };
                    if is_arg {
                        arguments.push(record);
                    } else {
                        locals.push(record);
                    }
                }
                StackFrame {
                    function_name: func.name.clone(),
                    frame_index,
                    line_number: frame.line,
                    arguments,
                    locals,
                }
            })
            .collect();
        debug_assert_eq!(frames.len(), depth);

        let heap = self
            .heap
            .iter()
            .map(|cell| {
                let (runtime_type, names): (String, Vec<(String, String)>) = match &cell.shape {
                    ObjectShape::Record(r) => {
                        let rec = &program.records[*r];
                        (
                            rec.name.clone(),
                            rec.fields.iter().map(|f| (f.name.clone(), f.type_text.clone())).collect(),
                        )
                    }
                    ObjectShape::Scalar(t) => {
                        let text = program.type_text(t);
                        (text.clone(), vec![("value".to_string(), text)])
                    }
                    ObjectShape::JavaString => {
                        ("java.lang.String".to_string(), vec![("value".to_string(), "char[]".to_string())])
                    }
                };
                HeapObject {
                    id: cell.label.clone(),
                    runtime_type,
                    fields: names
                        .into_iter()
                        .zip(&cell.fields)
                        .enumerate()
                        .map(|(i, ((name, declared_type), v))| VariableRecord {
                            name,
                            declared_type,
                            value: self.value(v),
                            address: cpp.then(|| hex_address(cell.addr + WORD * i as u64)),
                            kind: VariableKind::Field,
                        })
                        .collect(),
                    referenced_by: Vec::new(),
                }
            })
            .collect();

        let (threads, stack, globals) = match dialect {
            Dialect::Java => {
                let status = if frames.is_empty() { ThreadStatus::Finished } else { ThreadStatus::Paused };
                (Some(vec![ThreadState { name: "main".into(), status, stack: frames }]), None, None)
            }
            Dialect::Cpp => {
                let globals = program
                    .globals
                    .iter()
                    .zip(&self.globals)
                    .enumerate()
                    .map(|(i, (g, v))| VariableRecord {
                        name: g.name.clone(),
                        declared_type: g.type_text.clone(),
                        value: self.value(v),
                        address: Some(hex_address(GLOBALS_BASE + WORD * i as u64)),
                        kind: VariableKind::Global,
                    })
                    .collect();
                (None, Some(frames), Some(globals))
            }
        };

        annotate_heap_names(&Snapshot {
            language: dialect,
            step_index,
            line_number: self.current_line,
            threads,
            stack,
            heap,
            global_static_variables: globals,
            fault: self.fault.clone(),
            timestamp,
        })
    }
}

fn zero_value(ty: &Ty) -> RtValue {
    match ty {
        Ty::Int => RtValue::Int(0),
        Ty::Char => RtValue::Char('\0'),
        Ty::Bool => RtValue::Bool(false),
        Ty::Str => RtValue::Null,
        _ => RtValue::Null,
    }
}

/// Widening char -> int on stores.
fn coerce(v: RtValue, target: &Ty) -> RtValue {
    match (v, target) {
        (RtValue::Char(c), Ty::Int) => RtValue::Int(c as i32),
        (v, _) => v,
    }
}

fn as_int(v: &RtValue) -> Result<i32, String> {
    match v {
        RtValue::Int(n) => Ok(*n),
        RtValue::Char(c) => Ok(*c as i32),
        RtValue::Uninit => Err("use of uninitialized value".into()),
        other => Err(format!("expected a number, found {other:?}")),
    }
}

fn as_bool(v: &RtValue) -> Result<bool, String> {
    match v {
        RtValue::Bool(b) => Ok(*b),
        RtValue::Uninit => Err("use of uninitialized value".into()),
        other => Err(format!("expected a boolean, found {other:?}")),
    }
}

fn binary(op: BinOp, l: RtValue, r: RtValue) -> Result<RtValue, String> {
    if matches!(op, BinOp::Eq | BinOp::Ne) {
        if l == RtValue::Uninit || r == RtValue::Uninit {
            return Err("use of uninitialized value".into());
        }
        let equal = match (&l, &r) {
            (RtValue::Int(_) | RtValue::Char(_), RtValue::Int(_) | RtValue::Char(_)) => as_int(&l)? == as_int(&r)?,
            _ => l == r,
        };
        return Ok(RtValue::Bool(if op == BinOp::Eq { equal } else { !equal }));
    }
    let a = as_int(&l)?;
    let b = as_int(&r)?;
    Ok(match op {
        BinOp::Add => RtValue::Int(a.wrapping_add(b)),
        BinOp::Sub => RtValue::Int(a.wrapping_sub(b)),
        BinOp::Mul => RtValue::Int(a.wrapping_mul(b)),
        BinOp::Div | BinOp::Rem if b == 0 => return Err("division by zero".into()),
        BinOp::Div => RtValue::Int(a.wrapping_div(b)),
        BinOp::Rem => RtValue::Int(a.wrapping_rem(b)),
        BinOp::Lt => RtValue::Bool(a < b),
        BinOp::Le => RtValue::Bool(a <= b),
        BinOp::Gt => RtValue::Bool(a > b),
        BinOp::Ge => RtValue::Bool(a >= b),
        BinOp::Eq | BinOp::Ne | BinOp::And | BinOp::Or => unreachable!(),
    })
}
