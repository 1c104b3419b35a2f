//! Type checking and code generation in a single pass over the syntax tree.

use std::collections::HashMap;
use std::sync::Arc;

use super::ast::*;
use super::program::{
    type_text, Const, FieldInfo, Function, GlobalInfo, Instr, Program, RecordInfo, SlotInfo, Ty,
};
use super::Diagnostic;
use crate::snapshot::Dialect;

type CResult<T> = Result<T, Diagnostic>;

pub fn compile(ast: Ast, source: &str, dialect: Dialect) -> CResult<Program> {
    let mut records: Vec<RecordInfo> = Vec::new();
    let mut record_ids: HashMap<String, usize> = HashMap::new();
    for r in &ast.records {
        if record_ids.insert(r.name.clone(), records.len()).is_some() {
            return Err(Diagnostic::type_error(r.line, r.col, format!("type `{}` is declared twice", r.name)));
        }
        records.push(RecordInfo { name: r.name.clone(), fields: Vec::new() });
    }

    let resolver = TypeResolver { dialect, record_ids: &record_ids };
    let mut resolved_fields = Vec::new();
    for r in &ast.records {
        let mut fields: Vec<(String, Ty)> = Vec::new();
        for f in &r.fields {
            if fields.iter().any(|(n, _)| *n == f.name) {
                return Err(Diagnostic::type_error(f.line, f.col, format!("field `{}` is declared twice in `{}`", f.name, r.name)));
            }
            let ty = resolver.storage(&f.ty, f.line, f.col)?;
            fields.push((f.name.clone(), ty));
        }
        resolved_fields.push(fields);
    }
    for (rec, fields) in records.iter_mut().zip(resolved_fields) {
        rec.fields = fields
            .into_iter()
            .map(|(name, ty)| FieldInfo { name, ty, type_text: String::new() })
            .collect();
    }
    let texts: Vec<Vec<String>> = records
        .iter()
        .map(|r| r.fields.iter().map(|f| type_text(&f.ty, dialect, &records)).collect())
        .collect();
    for (rec, texts) in records.iter_mut().zip(texts) {
        for (f, t) in rec.fields.iter_mut().zip(texts) {
            f.type_text = t;
        }
    }

    let mut globals = Vec::new();
    for g in &ast.globals {
        if globals.iter().any(|x: &GlobalInfo| x.name == g.name) {
            return Err(Diagnostic::type_error(g.line, g.col, format!("global `{}` is declared twice", g.name)));
        }
        let ty = resolver.storage(&g.ty, g.line, g.col)?;
        let init = match &g.init {
            None => zero_const(&ty),
            Some(e) => {
                let (c, cty) = const_eval(e, dialect)?;
                if !assignable(&ty, &cty, dialect) {
                    return Err(mismatch(e, &ty, &cty, dialect, &records));
                }
                coerce_const(c, &ty)
            }
        };
        globals.push(GlobalInfo { name: g.name.clone(), type_text: type_text(&ty, dialect, &records), ty, init });
    }

    let mut signatures: HashMap<String, (usize, Vec<Ty>, Ty)> = HashMap::new();
    for (i, f) in ast.functions.iter().enumerate() {
        let params = f
            .params
            .iter()
            .map(|p| {
                if dialect == Dialect::Java && f.name == "main" {
                    if let TypeExpr::Array(_) = p.ty {
                        return Ok(Ty::Array(Box::new(Ty::Str)));
                    }
                }
                resolver.storage(&p.ty, p.line, p.col)
            })
            .collect::<CResult<Vec<_>>>()?;
        let ret = resolver.ret(&f.ret, f.line, f.col)?;
        if signatures.insert(f.name.clone(), (i, params, ret)).is_some() {
            return Err(Diagnostic::type_error(f.line, f.col, format!("function `{}` is declared twice", f.name)));
        }
    }

    let Some(&(entry, ref main_params, ref main_ret)) = signatures.get("main") else {
        return Err(Diagnostic::missing_main());
    };
    let main_decl = &ast.functions[entry];
    let params_ok = match dialect {
        Dialect::Java => {
            main_params.is_empty() || (main_params.len() == 1 && main_params[0] == Ty::Array(Box::new(Ty::Str)))
        }
        Dialect::Cpp => main_params.is_empty(),
    };
    if !params_ok {
        return Err(Diagnostic::type_error(main_decl.line, main_decl.col, "unsupported parameters for `main`"));
    }
    let ret_ok = match dialect {
        Dialect::Java => *main_ret == Ty::Void,
        Dialect::Cpp => matches!(main_ret, Ty::Void | Ty::Int),
    };
    if !ret_ok {
        return Err(Diagnostic::type_error(main_decl.line, main_decl.col, "unsupported return type for `main`"));
    }

    let env = Env { dialect, records: &records, record_ids: &record_ids, globals: &globals, signatures: &signatures };
    let functions = ast
        .functions
        .iter()
        .map(|f| FnCompiler::new(&env, f).compile(f))
        .collect::<CResult<Vec<_>>>()?;

    Ok(Program { source: source.to_string(), dialect, records, functions, globals, entry })
}

struct TypeResolver<'a> {
    dialect: Dialect,
    record_ids: &'a HashMap<String, usize>,
}

impl TypeResolver<'_> {
    fn any(&self, t: &TypeExpr, line: u32, col: u32) -> CResult<Ty> {
        Ok(match t {
            TypeExpr::Int => Ty::Int,
            TypeExpr::Char => Ty::Char,
            TypeExpr::Bool => Ty::Bool,
            TypeExpr::Str => Ty::Str,
            TypeExpr::Void => Ty::Void,
            TypeExpr::Named(n) => match self.record_ids.get(n) {
                Some(&id) => Ty::Record(id),
                None => return Err(Diagnostic::type_error(line, col, format!("unknown type `{n}`"))),
            },
            TypeExpr::Pointer(inner) => Ty::Ptr(Box::new(self.any(inner, line, col)?)),
            TypeExpr::Array(_) => {
                return Err(Diagnostic::type_error(line, col, "arrays are only supported as the parameter of `main`"))
            }
        })
    }

    /// Type of a variable, field or parameter.
    fn storage(&self, t: &TypeExpr, line: u32, col: u32) -> CResult<Ty> {
        let ty = self.any(t, line, col)?;
        match (&ty, self.dialect) {
            (Ty::Void, _) => Err(Diagnostic::type_error(line, col, "`void` is not a value type")),
            (Ty::Record(r), Dialect::Cpp) => Err(Diagnostic::type_error(
                line,
                col,
                format!("struct values are held by pointer; use `{}*`", self.name_of(*r)),
            )),
            (Ty::Ptr(inner), _) if **inner == Ty::Void => {
                Err(Diagnostic::type_error(line, col, "`void*` is not supported"))
            }
            _ => Ok(ty),
        }
    }

    fn ret(&self, t: &TypeExpr, line: u32, col: u32) -> CResult<Ty> {
        match t {
            TypeExpr::Void => Ok(Ty::Void),
            other => self.storage(other, line, col),
        }
    }

    fn name_of(&self, id: usize) -> &str {
        self.record_ids.iter().find(|(_, v)| **v == id).map(|(k, _)| k.as_str()).unwrap_or("?")
    }
}

fn assignable(target: &Ty, src: &Ty, dialect: Dialect) -> bool {
    target == src
        || (*target == Ty::Int && *src == Ty::Char)
        || (*src == Ty::Null && target.is_nullable(dialect) && *target != Ty::Null)
}

fn zero_const(ty: &Ty) -> Const {
    match ty {
        Ty::Int => Const::Int(0),
        Ty::Char => Const::Char('\0'),
        Ty::Bool => Const::Bool(false),
        Ty::Str => Const::Str(Arc::from("")),
        _ => Const::Null,
    }
}

fn coerce_const(c: Const, target: &Ty) -> Const {
    match (c, target) {
        (Const::Char(ch), Ty::Int) => Const::Int(ch as i32),
        (c, _) => c,
    }
}

fn const_eval(e: &Expr, dialect: Dialect) -> CResult<(Const, Ty)> {
    let fail = || Diagnostic::type_error(e.line, e.col, "global initializer must be a constant expression");
    Ok(match &e.kind {
        ExprKind::Int(n) => (Const::Int(*n as i32), Ty::Int),
        ExprKind::Char(c) => (Const::Char(*c), Ty::Char),
        ExprKind::Bool(b) => (Const::Bool(*b), Ty::Bool),
        ExprKind::Str(s) if dialect == Dialect::Cpp => (Const::Str(Arc::from(s.as_str())), Ty::Str),
        ExprKind::Null => (Const::Null, Ty::Null),
        ExprKind::Unary { op: UnOp::Neg, operand } => match const_eval(operand, dialect)? {
            (Const::Int(n), _) => (Const::Int(n.wrapping_neg()), Ty::Int),
            (Const::Char(c), _) => (Const::Int((c as i32).wrapping_neg()), Ty::Int),
            _ => return Err(fail()),
        },
        ExprKind::Unary { op: UnOp::Not, operand } => match const_eval(operand, dialect)? {
            (Const::Bool(b), _) => (Const::Bool(!b), Ty::Bool),
            _ => return Err(fail()),
        },
        ExprKind::Binary { op, lhs, rhs } if matches!(op, BinOp::Add | BinOp::Sub | BinOp::Mul) => {
            let as_int = |c: Const| match c {
                Const::Int(n) => Some(n),
                Const::Char(c) => Some(c as i32),
                _ => None,
            };
            let a = as_int(const_eval(lhs, dialect)?.0).ok_or_else(fail)?;
            let b = as_int(const_eval(rhs, dialect)?.0).ok_or_else(fail)?;
            let v = match op {
                BinOp::Add => a.wrapping_add(b),
                BinOp::Sub => a.wrapping_sub(b),
                _ => a.wrapping_mul(b),
            };
            (Const::Int(v), Ty::Int)
        }
        _ => return Err(fail()),
    })
}

fn mismatch(e: &Expr, want: &Ty, got: &Ty, dialect: Dialect, records: &[RecordInfo]) -> Diagnostic {
    Diagnostic::type_error(
        e.line,
        e.col,
        format!(
            "expected {}, found {}",
            type_text(want, dialect, records),
            type_text(got, dialect, records)
        ),
    )
}

struct Env<'a> {
    dialect: Dialect,
    records: &'a [RecordInfo],
    record_ids: &'a HashMap<String, usize>,
    globals: &'a [GlobalInfo],
    signatures: &'a HashMap<String, (usize, Vec<Ty>, Ty)>,
}

impl Env<'_> {
    fn text(&self, ty: &Ty) -> String {
        type_text(ty, self.dialect, self.records)
    }
}

enum Place {
    Local(u16, Ty),
    Global(u16, Ty),
}

struct FnCompiler<'a> {
    env: &'a Env<'a>,
    name: String,
    ret: Ty,
    slots: Vec<SlotInfo>,
    scopes: Vec<Vec<(String, u16)>>,
    code: Vec<Instr>,
}

impl<'a> FnCompiler<'a> {
    fn new(env: &'a Env<'a>, f: &FunctionDecl) -> Self {
        let ret = env.signatures[&f.name].2.clone();
        FnCompiler { env, name: f.name.clone(), ret, slots: Vec::new(), scopes: vec![Vec::new()], code: Vec::new() }
    }

    fn compile(mut self, f: &FunctionDecl) -> CResult<Function> {
        let param_types = self.env.signatures[&f.name].1.clone();
        for (p, ty) in f.params.iter().zip(param_types) {
            self.declare(&p.name, ty, p.line, p.col)?;
        }
        let param_count = self.slots.len();
        self.block_body(&f.body)?;
        if completes_normally(&f.body) {
            self.code.push(Instr::Stmt(f.body.end_line));
            if self.ret == Ty::Void {
                self.code.push(Instr::ReturnVoid);
            } else if self.name == "main" && self.ret == Ty::Int {
                // falling off the end of main returns 0
                self.code.push(Instr::Const(Const::Int(0)));
                self.code.push(Instr::Return);
            } else {
                self.code.push(Instr::MissingReturn);
            }
        }
        Ok(Function { name: self.name, param_count, slots: self.slots, ret: self.ret, code: self.code, line: f.line })
    }

    fn declare(&mut self, name: &str, ty: Ty, line: u32, col: u32) -> CResult<u16> {
        if self.scopes.iter().flatten().any(|(n, _)| n == name) {
            return Err(Diagnostic::type_error(line, col, format!("variable `{name}` is already declared")));
        }
        let slot = u16::try_from(self.slots.len())
            .map_err(|_| Diagnostic::type_error(line, col, "too many local variables"))?;
        self.slots.push(SlotInfo { name: name.to_string(), type_text: self.env.text(&ty), ty });
        self.scopes.last_mut().expect("scope").push((name.to_string(), slot));
        Ok(slot)
    }

    fn lookup(&self, name: &str, e: &Expr) -> CResult<Place> {
        for scope in self.scopes.iter().rev() {
            if let Some((_, slot)) = scope.iter().find(|(n, _)| n == name) {
                return Ok(Place::Local(*slot, self.slots[*slot as usize].ty.clone()));
            }
        }
        if let Some(i) = self.env.globals.iter().position(|g| g.name == name) {
            return Ok(Place::Global(i as u16, self.env.globals[i].ty.clone()));
        }
        Err(Diagnostic::type_error(e.line, e.col, format!("unknown variable `{name}`")))
    }

    fn emit(&mut self, i: Instr) -> usize {
        self.code.push(i);
        self.code.len() - 1
    }

    fn patch(&mut self, at: usize) {
        let target = self.code.len();
        match &mut self.code[at] {
            Instr::Jump(t) | Instr::JumpIfFalse(t) | Instr::JumpIfTrue(t) => *t = target,
            other => unreachable!("patching non-jump {other:?}"),
        }
    }

    fn scoped(&mut self, f: impl FnOnce(&mut Self) -> CResult<()>) -> CResult<()> {
        self.scopes.push(Vec::new());
        f(self)?;
        let scope = self.scopes.pop().expect("scope");
        if !scope.is_empty() {
            self.emit(Instr::EndScope(scope.into_iter().map(|(_, s)| s).collect()));
        }
        Ok(())
    }

    fn block_body(&mut self, b: &Block) -> CResult<()> {
        for s in &b.stmts {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn block(&mut self, b: &Block) -> CResult<()> {
        self.scoped(|c| c.block_body(b))
    }

    fn stmt(&mut self, s: &Stmt) -> CResult<()> {
        match &s.kind {
            StmtKind::Block(b) => self.block(b),
            StmtKind::If { cond, then_branch, else_branch } => {
                self.emit(Instr::Stmt(s.line));
                self.condition(cond)?;
                let to_else = self.emit(Instr::JumpIfFalse(0));
                self.block(then_branch)?;
                match else_branch {
                    Some(eb) => {
                        let to_end = self.emit(Instr::Jump(0));
                        self.patch(to_else);
                        self.block(eb)?;
                        self.patch(to_end);
                    }
                    None => self.patch(to_else),
                }
                Ok(())
            }
            StmtKind::While { cond, body } => {
                let top = self.emit(Instr::Stmt(s.line));
                self.condition(cond)?;
                let exit = self.emit(Instr::JumpIfFalse(0));
                self.block(body)?;
                self.emit(Instr::Jump(top));
                self.patch(exit);
                Ok(())
            }
            StmtKind::For { init, cond, update, body } => self.scoped(|c| {
                c.emit(Instr::Stmt(s.line));
                if let Some(init) = init {
                    c.simple(init)?;
                }
                let top = c.code.len();
                let exit = match cond {
                    Some(cond) => {
                        c.condition(cond)?;
                        Some(c.emit(Instr::JumpIfFalse(0)))
                    }
                    None => None,
                };
                c.block(body)?;
                c.emit(Instr::Stmt(s.line));
                if let Some(update) = update {
                    c.simple(update)?;
                }
                c.emit(Instr::Jump(top));
                if let Some(exit) = exit {
                    c.patch(exit);
                }
                Ok(())
            }),
            StmtKind::Return(value) => {
                self.emit(Instr::Stmt(s.line));
                match (value, &self.ret) {
                    (None, Ty::Void) => {
                        self.emit(Instr::ReturnVoid);
                    }
                    (None, _) => {
                        return Err(Diagnostic::type_error(s.line, s.col, format!("`{}` must return a value", self.name)))
                    }
                    (Some(e), Ty::Void) => {
                        return Err(Diagnostic::type_error(e.line, e.col, format!("`{}` returns void", self.name)))
                    }
                    (Some(e), ret) => {
                        let ret = ret.clone();
                        self.expect_expr(e, &ret)?;
                        self.emit(Instr::Return);
                    }
                }
                Ok(())
            }
            _ => {
                self.emit(Instr::Stmt(s.line));
                self.simple(s)
            }
        }
    }

    /// Declarations, assignments and expression statements (no boundary).
    fn simple(&mut self, s: &Stmt) -> CResult<()> {
        match &s.kind {
            StmtKind::VarDecl { ty, name, init } => {
                let resolver = TypeResolver { dialect: self.env.dialect, record_ids: self.env.record_ids };
                let ty = resolver.storage(ty, s.line, s.col)?;
                match init {
                    Some(e) => self.expect_expr(e, &ty)?,
                    None if self.env.dialect == Dialect::Java => {
                        return Err(Diagnostic::type_error(s.line, s.col, format!("variable `{name}` must be initialized")))
                    }
                    None => {
                        self.emit(Instr::Const(Const::Uninit));
                    }
                }
                let slot = self.declare(name, ty, s.line, s.col)?;
                self.emit(Instr::Declare(slot));
                Ok(())
            }
            StmtKind::Assign { target, op, value } => self.assign(target, *op, value),
            StmtKind::Expr(e) => {
                let ExprKind::Call { .. } = e.kind else {
                    return Err(Diagnostic::type_error(e.line, e.col, "not a statement"));
                };
                let ty = self.call(e, true)?;
                if ty != Ty::Void {
                    self.emit(Instr::Pop);
                }
                Ok(())
            }
            _ => Err(Diagnostic::syntax(s.line, s.col, "unexpected statement")),
        }
    }

    fn assign(&mut self, target: &Expr, op: AssignOp, value: &Expr) -> CResult<()> {
        let binop = match op {
            AssignOp::Set => None,
            AssignOp::Add => Some(BinOp::Add),
            AssignOp::Sub => Some(BinOp::Sub),
            AssignOp::Mul => Some(BinOp::Mul),
            AssignOp::Div => Some(BinOp::Div),
            AssignOp::Rem => Some(BinOp::Rem),
        };
        if binop.is_some() && target.contains_call() {
            return Err(Diagnostic::type_error(target.line, target.col, "compound assignment target must not contain a call"));
        }
        // Emit the location prefix, returning the target type.
        let (ty, store) = match &target.kind {
            ExprKind::Var(name) => match self.lookup(name, target)? {
                Place::Local(slot, ty) => {
                    if binop.is_some() {
                        self.emit(Instr::Load(slot));
                    }
                    (ty, Instr::Store(slot))
                }
                Place::Global(g, ty) => {
                    if binop.is_some() {
                        self.emit(Instr::LoadGlobal(g));
                    }
                    (ty, Instr::StoreGlobal(g))
                }
            },
            ExprKind::Field { object, field, arrow } => {
                let (record, idx) = self.field_target(object, field, *arrow, target)?;
                if binop.is_some() {
                    self.emit(Instr::Dup);
                    self.emit(Instr::GetField(idx));
                }
                (self.env.records[record].fields[idx as usize].ty.clone(), Instr::SetField(idx))
            }
            ExprKind::Deref(inner) => {
                let pty = self.expr(inner)?;
                let Ty::Ptr(pointee) = pty else {
                    return Err(Diagnostic::type_error(inner.line, inner.col, "cannot dereference a non-pointer"));
                };
                if let Ty::Record(_) = *pointee {
                    return Err(Diagnostic::type_error(target.line, target.col, "cannot assign a whole struct; assign its fields"));
                }
                if binop.is_some() {
                    self.emit(Instr::Dup);
                    self.emit(Instr::Deref);
                }
                (*pointee, Instr::StoreDeref)
            }
            _ => return Err(Diagnostic::type_error(target.line, target.col, "left side of assignment is not assignable")),
        };
        match binop {
            None => self.expect_expr(value, &ty)?,
            Some(op) => {
                if ty != Ty::Int {
                    return Err(Diagnostic::type_error(target.line, target.col, format!("operator `{}=` needs an int target", op.symbol())));
                }
                let vt = self.expr(value)?;
                if !vt.is_numeric() {
                    return Err(mismatch(value, &Ty::Int, &vt, self.env.dialect, self.env.records));
                }
                self.emit(Instr::Binary(op));
            }
        }
        self.emit(store);
        Ok(())
    }

    /// Emits the object reference for a field access; returns (record, field index).
    fn field_target(&mut self, object: &Expr, field: &str, arrow: bool, at: &Expr) -> CResult<(usize, u16)> {
        let dialect = self.env.dialect;
        let record = match (dialect, arrow) {
            (Dialect::Java, _) => match self.expr(object)? {
                Ty::Record(r) => r,
                other => {
                    return Err(Diagnostic::type_error(at.line, at.col, format!("`{}` has no field `{field}`", self.env.text(&other))))
                }
            },
            (Dialect::Cpp, true) => match self.expr(object)? {
                Ty::Ptr(inner) => match *inner {
                    Ty::Record(r) => r,
                    other => {
                        return Err(Diagnostic::type_error(at.line, at.col, format!("`{}` has no field `{field}`", self.env.text(&other))))
                    }
                },
                other => {
                    return Err(Diagnostic::type_error(at.line, at.col, format!("`->` needs a pointer, found {}", self.env.text(&other))))
                }
            },
            (Dialect::Cpp, false) => {
                // `(*p).f` is the only way to name a struct value in cpp.
                let ExprKind::Deref(ptr) = &object.kind else {
                    return Err(Diagnostic::type_error(at.line, at.col, format!("use `->` to access field `{field}` through a pointer")));
                };
                match self.expr(ptr)? {
                    Ty::Ptr(inner) => match *inner {
                        Ty::Record(r) => r,
                        other => {
                            return Err(Diagnostic::type_error(at.line, at.col, format!("`{}` has no field `{field}`", self.env.text(&other))))
                        }
                    },
                    other => {
                        return Err(Diagnostic::type_error(at.line, at.col, format!("cannot dereference {}", self.env.text(&other))))
                    }
                }
            }
        };
        let rec = &self.env.records[record];
        let idx = rec.field_index(field).ok_or_else(|| {
            Diagnostic::type_error(at.line, at.col, format!("`{}` has no field `{field}`", rec.name))
        })?;
        Ok((record, idx as u16))
    }

    fn condition(&mut self, e: &Expr) -> CResult<()> {
        self.expect_expr(e, &Ty::Bool)
    }

    fn expect_expr(&mut self, e: &Expr, want: &Ty) -> CResult<()> {
        let got = self.expr(e)?;
        if !assignable(want, &got, self.env.dialect) {
            return Err(mismatch(e, want, &got, self.env.dialect, self.env.records));
        }
        Ok(())
    }

    fn call(&mut self, e: &Expr, as_statement: bool) -> CResult<Ty> {
        let ExprKind::Call { qualifier, name, args } = &e.kind else { unreachable!() };
        if let Some(q) = qualifier {
            if self.env.dialect == Dialect::Cpp || !self.env.record_ids.contains_key(q) {
                return Err(Diagnostic::type_error(e.line, e.col, format!("unknown class `{q}`")));
            }
        }
        let Some((index, params, ret)) = self.env.signatures.get(name) else {
            return Err(Diagnostic::type_error(e.line, e.col, format!("unknown function `{name}`")));
        };
        if params.len() != args.len() {
            return Err(Diagnostic::type_error(
                e.line,
                e.col,
                format!("`{name}` takes {} argument(s), {} given", params.len(), args.len()),
            ));
        }
        for (arg, p) in args.iter().zip(params.clone()) {
            self.expect_expr(arg, &p)?;
        }
        if *ret == Ty::Void && !as_statement {
            return Err(Diagnostic::type_error(e.line, e.col, format!("`{name}` returns void")));
        }
        self.emit(Instr::Call { function: *index, argc: args.len() });
        Ok(ret.clone())
    }

    fn expr(&mut self, e: &Expr) -> CResult<Ty> {
        let dialect = self.env.dialect;
        Ok(match &e.kind {
            ExprKind::Int(n) => {
                self.emit(Instr::Const(Const::Int(*n as i32)));
                Ty::Int
            }
            ExprKind::Char(c) => {
                self.emit(Instr::Const(Const::Char(*c)));
                Ty::Char
            }
            ExprKind::Bool(b) => {
                self.emit(Instr::Const(Const::Bool(*b)));
                Ty::Bool
            }
            ExprKind::Null => {
                self.emit(Instr::Const(Const::Null));
                Ty::Null
            }
            ExprKind::Str(s) => {
                let s: Arc<str> = Arc::from(s.as_str());
                self.emit(match dialect {
                    Dialect::Java => Instr::NewString(s),
                    Dialect::Cpp => Instr::Const(Const::Str(s)),
                });
                Ty::Str
            }
            ExprKind::Var(name) => match self.lookup(name, e)? {
                Place::Local(slot, ty) => {
                    self.emit(Instr::Load(slot));
                    ty
                }
                Place::Global(g, ty) => {
                    self.emit(Instr::LoadGlobal(g));
                    ty
                }
            },
            ExprKind::Field { object, field, arrow } => {
                let (record, idx) = self.field_target(object, field, *arrow, e)?;
                self.emit(Instr::GetField(idx));
                self.env.records[record].fields[idx as usize].ty.clone()
            }
            ExprKind::Call { .. } => self.call(e, false)?,
            ExprKind::New { ty, zeroed } => {
                let resolver = TypeResolver { dialect, record_ids: self.env.record_ids };
                match resolver.any(ty, e.line, e.col)? {
                    Ty::Record(r) => {
                        self.emit(Instr::NewRecord { record: r, zeroed: *zeroed });
                        match dialect {
                            Dialect::Java => Ty::Record(r),
                            Dialect::Cpp => Ty::Ptr(Box::new(Ty::Record(r))),
                        }
                    }
                    t @ (Ty::Int | Ty::Char | Ty::Bool) if dialect == Dialect::Cpp => {
                        self.emit(Instr::NewScalar { ty: t.clone(), zeroed: *zeroed });
                        Ty::Ptr(Box::new(t))
                    }
                    other => {
                        return Err(Diagnostic::type_error(e.line, e.col, format!("cannot allocate `{}`", self.env.text(&other))))
                    }
                }
            }
            ExprKind::AddrOf(inner) => {
                let ExprKind::Var(name) = &inner.kind else {
                    return Err(Diagnostic::type_error(e.line, e.col, "`&` can only take the address of a variable"));
                };
                match self.lookup(name, inner)? {
                    Place::Local(slot, ty) => {
                        self.emit(Instr::AddrLocal(slot));
                        Ty::Ptr(Box::new(ty))
                    }
                    Place::Global(g, ty) => {
                        self.emit(Instr::AddrGlobal(g));
                        Ty::Ptr(Box::new(ty))
                    }
                }
            }
            ExprKind::Deref(inner) => match self.expr(inner)? {
                Ty::Ptr(pointee) => {
                    if let Ty::Record(_) = *pointee {
                        return Err(Diagnostic::type_error(e.line, e.col, "cannot copy a struct value; access its fields"));
                    }
                    self.emit(Instr::Deref);
                    *pointee
                }
                other => {
                    return Err(Diagnostic::type_error(e.line, e.col, format!("cannot dereference {}", self.env.text(&other))))
                }
            },
            ExprKind::Unary { op: UnOp::Neg, operand } => {
                let t = self.expr(operand)?;
                if !t.is_numeric() {
                    return Err(Diagnostic::type_error(e.line, e.col, format!("operator `-` cannot be applied to {}", self.env.text(&t))));
                }
                self.emit(Instr::Neg);
                Ty::Int
            }
            ExprKind::Unary { op: UnOp::Not, operand } => {
                self.expect_expr(operand, &Ty::Bool)?;
                self.emit(Instr::Not);
                Ty::Bool
            }
            ExprKind::Binary { op: op @ (BinOp::And | BinOp::Or), lhs, rhs } => {
                self.expect_expr(lhs, &Ty::Bool)?;
                let short = self.emit(if *op == BinOp::And { Instr::JumpIfFalse(0) } else { Instr::JumpIfTrue(0) });
                self.expect_expr(rhs, &Ty::Bool)?;
                let end = self.emit(Instr::Jump(0));
                self.patch(short);
                self.emit(Instr::Const(Const::Bool(*op == BinOp::Or)));
                self.patch(end);
                Ty::Bool
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let lt = self.expr(lhs)?;
                let rt = self.expr(rhs)?;
                let bad = || {
                    Diagnostic::type_error(
                        e.line,
                        e.col,
                        format!(
                            "operator `{}` cannot be applied to {} and {}",
                            op.symbol(),
                            self.env.text(&lt),
                            self.env.text(&rt)
                        ),
                    )
                };
                let result = match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem => {
                        if !(lt.is_numeric() && rt.is_numeric()) {
                            return Err(bad());
                        }
                        Ty::Int
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        if !(lt.is_numeric() && rt.is_numeric()) {
                            return Err(bad());
                        }
                        Ty::Bool
                    }
                    BinOp::Eq | BinOp::Ne => {
                        let ok = (lt.is_numeric() && rt.is_numeric())
                            || (lt == Ty::Bool && rt == Ty::Bool)
                            || (lt == rt && lt.is_nullable(dialect))
                            || (lt == Ty::Str && rt == Ty::Str)
                            || (lt == Ty::Null && rt.is_nullable(dialect))
                            || (rt == Ty::Null && lt.is_nullable(dialect));
                        if !ok {
                            return Err(bad());
                        }
                        Ty::Bool
                    }
                    BinOp::And | BinOp::Or => unreachable!(),
                };
                self.emit(Instr::Binary(*op));
                result
            }
        })
    }
}

/// Conservative: false only when the block certainly ends in a return.
fn completes_normally(b: &Block) -> bool {
    match b.stmts.last() {
        None => true,
        Some(s) => match &s.kind {
            StmtKind::Return(_) => false,
            StmtKind::Block(inner) => completes_normally(inner),
            StmtKind::If { then_branch, else_branch: Some(eb), .. } => {
                completes_normally(then_branch) || completes_normally(eb)
            }
            _ => true,
        },
    }
}
