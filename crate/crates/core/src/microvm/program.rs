//! Checked and compiled program representation.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::ast::BinOp;
use crate::snapshot::Dialect;

/// Static type of an expression or storage location.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Ty {
    Int,
    Char,
    Bool,
    Str,
    Void,
    Null,
    Record(usize),
    Ptr(Box<Ty>),
    Array(Box<Ty>),
}

impl Ty {
    pub fn is_numeric(&self) -> bool {
        matches!(self, Ty::Int | Ty::Char)
    }

    /// Types that hold a heap reference (or pointer) and accept null.
    pub fn is_nullable(&self, dialect: Dialect) -> bool {
        match dialect {
            Dialect::Java => matches!(self, Ty::Str | Ty::Record(_) | Ty::Array(_) | Ty::Null),
            Dialect::Cpp => matches!(self, Ty::Ptr(_) | Ty::Null),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FieldInfo {
    pub name: String,
    pub ty: Ty,
    pub type_text: String,
}

#[derive(Debug, Clone)]
pub struct RecordInfo {
    pub name: String,
    pub fields: Vec<FieldInfo>,
}

impl RecordInfo {
    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }
}

#[derive(Debug, Clone)]
pub struct SlotInfo {
    pub name: String,
    pub ty: Ty,
    pub type_text: String,
}

#[derive(Debug, Clone)]
pub struct GlobalInfo {
    pub name: String,
    pub ty: Ty,
    pub type_text: String,
    pub init: Const,
}

/// Compile-time constant; also used for literal operands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Const {
    Int(i32),
    Char(char),
    Bool(bool),
    Str(Arc<str>),
    Null,
    Uninit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instr {
    /// Statement boundary on the given source line; the VM pauses here.
    Stmt(u32),
    Const(Const),
    /// java string literal: allocates a `java.lang.String` heap object.
    NewString(Arc<str>),
    Load(u16),
    Store(u16),
    /// Pops the initial value and brings the slot into scope.
    Declare(u16),
    EndScope(Vec<u16>),
    LoadGlobal(u16),
    StoreGlobal(u16),
    AddrLocal(u16),
    AddrGlobal(u16),
    GetField(u16),
    /// Stack: `[.., object, value]`.
    SetField(u16),
    Deref,
    /// Stack: `[.., pointer, value]`.
    StoreDeref,
    NewRecord { record: usize, zeroed: bool },
    NewScalar { ty: Ty, zeroed: bool },
    Binary(BinOp),
    Neg,
    Not,
    Dup,
    Pop,
    Jump(usize),
    JumpIfFalse(usize),
    JumpIfTrue(usize),
    Call { function: usize, argc: usize },
    Return,
    ReturnVoid,
    MissingReturn,
}

#[derive(Debug, Clone)]
pub struct Function {
    pub name: String,
    /// Parameters occupy the first `param_count` slots.
    pub param_count: usize,
    pub slots: Vec<SlotInfo>,
    pub ret: Ty,
    pub code: Vec<Instr>,
    pub line: u32,
}

/// A parsed, type-checked and compiled program.
#[derive(Debug, Clone)]
pub struct Program {
    pub(crate) source: String,
    pub(crate) dialect: Dialect,
    pub(crate) records: Vec<RecordInfo>,
    pub(crate) functions: Vec<Function>,
    pub(crate) globals: Vec<GlobalInfo>,
    pub(crate) entry: usize,
}

impl Program {
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn dialect(&self) -> Dialect {
        self.dialect
    }

    pub fn function_names(&self) -> impl Iterator<Item = &str> {
        self.functions.iter().map(|f| f.name.as_str())
    }

    pub fn record(&self, name: &str) -> Option<&RecordInfo> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn records(&self) -> &[RecordInfo] {
        &self.records
    }

    pub fn globals(&self) -> &[GlobalInfo] {
        &self.globals
    }

    pub fn entry(&self) -> &Function {
        &self.functions[self.entry]
    }

    /// Lines holding a statement (or a function's closing brace that can be
    /// reached); only these accept breakpoints.
    pub fn executable_lines(&self) -> BTreeSet<u32> {
        self.functions
            .iter()
            .flat_map(|f| f.code.iter())
            .filter_map(|i| match i {
                Instr::Stmt(line) => Some(*line),
                _ => None,
            })
            .collect()
    }

    pub(crate) fn type_text(&self, ty: &Ty) -> String {
        type_text(ty, self.dialect, &self.records)
    }
}

pub(crate) fn type_text(ty: &Ty, dialect: Dialect, records: &[RecordInfo]) -> String {
    match (ty, dialect) {
        (Ty::Int, _) => "int".into(),
        (Ty::Char, _) => "char".into(),
        (Ty::Void, _) => "void".into(),
        (Ty::Null, _) => "null".into(),
        (Ty::Bool, Dialect::Java) => "boolean".into(),
        (Ty::Bool, Dialect::Cpp) => "bool".into(),
        (Ty::Str, Dialect::Java) => "java.lang.String".into(),
        (Ty::Str, Dialect::Cpp) => "std::string".into(),
        (Ty::Record(r), _) => records[*r].name.clone(),
        (Ty::Ptr(t), _) => format!("{}*", type_text(t, dialect, records)),
        (Ty::Array(t), _) => format!("{}[]", type_text(t, dialect, records)),
    }
}
