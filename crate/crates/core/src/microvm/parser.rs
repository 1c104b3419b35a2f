use super::ast::*;
use super::lexer::{Tok, Token};
use super::Diagnostic;
use crate::snapshot::Dialect;

pub fn parse(tokens: Vec<Token>, dialect: Dialect) -> Result<Ast, Diagnostic> {
    let mut p = Parser { toks: tokens, pos: 0, dialect };
    match dialect {
        Dialect::Java => p.java_program(),
        Dialect::Cpp => p.cpp_program(),
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    dialect: Dialect,
}

const JAVA_MODIFIERS: &[&str] = &["public", "private", "protected", "final"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn here(&self) -> (u32, u32) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, Diagnostic> {
        let (line, col) = self.here();
        Err(Diagnostic::syntax(line, col, msg))
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Char(c) => format!("'{}'", c.escape_default()),
            Tok::Str(s) => format!("{s:?}"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<Token, Diagnostic> {
        if self.is_punct(p) {
            Ok(self.advance())
        } else {
            self.error(format!("expected `{p}`, found {}", self.describe()))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), Diagnostic> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.error(format!("expected `{kw}`, found {}", self.describe()))
        }
    }

    fn ident(&mut self) -> Result<(String, u32, u32), Diagnostic> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_reserved(&s, self.dialect) => {
                let t = self.advance();
                Ok((s, t.line, t.col))
            }
            _ => self.error(format!("expected identifier, found {}", self.describe())),
        }
    }

    // ---- java ----

    fn java_program(&mut self) -> Result<Ast, Diagnostic> {
        let mut ast = Ast::default();
        while *self.peek() != Tok::Eof {
            while JAVA_MODIFIERS.iter().any(|m| self.is_kw(m)) {
                self.advance();
            }
            let (line, col) = self.here();
            self.expect_kw("class")?;
            let (name, _, _) = self.ident()?;
            self.expect_punct("{")?;
            let mut fields = Vec::new();
            while !self.eat_punct("}") {
                if *self.peek() == Tok::Eof {
                    return self.error("unexpected end of input in class body");
                }
                let mut is_static = false;
                loop {
                    if self.eat_kw("static") {
                        is_static = true;
                    } else if JAVA_MODIFIERS.iter().any(|m| self.is_kw(m)) {
                        self.advance();
                    } else {
                        break;
                    }
                }
                let (mline, mcol) = self.here();
                let ty = self.parse_type()?;
                let (mname, _, _) = self.ident()?;
                if self.is_punct("(") {
                    if !is_static {
                        return Err(Diagnostic::syntax(
                            mline,
                            mcol,
                            format!("instance method `{mname}` is not supported; declare it static"),
                        ));
                    }
                    ast.functions.push(self.function_rest(ty, mname, mline, mcol)?);
                } else {
                    if is_static {
                        return Err(Diagnostic::syntax(
                            mline,
                            mcol,
                            format!("static field `{mname}` is not supported"),
                        ));
                    }
                    if self.is_punct("=") {
                        return self.error(format!("field initializer for `{mname}` is not supported"));
                    }
                    self.expect_punct(";")?;
                    fields.push(FieldDecl { ty, name: mname, line: mline, col: mcol });
                }
            }
            ast.records.push(RecordDecl { name, fields, line, col });
        }
        Ok(ast)
    }

    // ---- cpp ----

    fn cpp_program(&mut self) -> Result<Ast, Diagnostic> {
        let mut ast = Ast::default();
        while *self.peek() != Tok::Eof {
            if self.eat_kw("using") {
                self.expect_kw("namespace")?;
                if !matches!(self.peek(), Tok::Ident(_)) {
                    return self.error(format!("expected namespace name, found {}", self.describe()));
                }
                self.advance();
                self.expect_punct(";")?;
                continue;
            }
            let (line, col) = self.here();
            if self.is_kw("struct") && matches!(self.peek_at(2), Tok::Punct("{")) {
                self.advance();
                let (name, _, _) = self.ident()?;
                self.expect_punct("{")?;
                let mut fields = Vec::new();
                while !self.eat_punct("}") {
                    let (fl, fc) = self.here();
                    let ty = self.parse_type()?;
                    let (fname, _, _) = self.ident()?;
                    self.expect_punct(";")?;
                    fields.push(FieldDecl { ty, name: fname, line: fl, col: fc });
                }
                self.expect_punct(";")?;
                ast.records.push(RecordDecl { name, fields, line, col });
                continue;
            }
            let ty = self.parse_type()?;
            let (name, _, _) = self.ident()?;
            if self.is_punct("(") {
                ast.functions.push(self.function_rest(ty, name, line, col)?);
            } else {
                let init = if self.eat_punct("=") { Some(self.expr()?) } else { None };
                self.expect_punct(";")?;
                ast.globals.push(GlobalDecl { ty, name, init, line, col });
            }
        }
        Ok(ast)
    }

    // ---- shared ----

    fn function_rest(&mut self, ret: TypeExpr, name: String, line: u32, col: u32) -> Result<FunctionDecl, Diagnostic> {
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if self.dialect == Dialect::Cpp && self.is_kw("void") && matches!(self.peek_at(1), Tok::Punct(")")) {
            self.advance();
        }
        if !self.is_punct(")") {
            loop {
                let (pl, pc) = self.here();
                let ty = self.parse_type()?;
                let (pname, _, _) = self.ident()?;
                params.push(Param { ty, name: pname, line: pl, col: pc });
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        let body = self.block()?;
        Ok(FunctionDecl { name, params, ret, body, line, col })
    }

    fn base_type(&mut self) -> Result<TypeExpr, Diagnostic> {
        let ty = match self.peek().clone() {
            Tok::Ident(s) => match (self.dialect, s.as_str()) {
                (_, "int") => TypeExpr::Int,
                (_, "char") => TypeExpr::Char,
                (_, "void") => TypeExpr::Void,
                (Dialect::Java, "boolean") | (Dialect::Cpp, "bool") => TypeExpr::Bool,
                (Dialect::Java, "String") | (Dialect::Cpp, "string") => TypeExpr::Str,
                (Dialect::Cpp, "std") => {
                    self.advance();
                    self.expect_punct("::")?;
                    if !self.is_kw("string") {
                        return self.error(format!("unsupported type std::{}", self.describe()));
                    }
                    TypeExpr::Str
                }
                (Dialect::Cpp, "struct") => {
                    self.advance();
                    let (name, _, _) = self.ident()?;
                    return Ok(TypeExpr::Named(name));
                }
                (Dialect::Cpp, "const") => {
                    self.advance();
                    return self.base_type();
                }
                _ if is_reserved(&s, self.dialect) => {
                    return self.error(format!("expected type, found {}", self.describe()))
                }
                _ => TypeExpr::Named(s),
            },
            _ => return self.error(format!("expected type, found {}", self.describe())),
        };
        self.advance();
        Ok(ty)
    }

    fn parse_type(&mut self) -> Result<TypeExpr, Diagnostic> {
        let mut ty = self.base_type()?;
        match self.dialect {
            Dialect::Java => {
                while self.is_punct("[") && matches!(self.peek_at(1), Tok::Punct("]")) {
                    self.advance();
                    self.advance();
                    ty = TypeExpr::Array(Box::new(ty));
                }
            }
            Dialect::Cpp => {
                while self.eat_punct("*") {
                    ty = TypeExpr::Pointer(Box::new(ty));
                }
            }
        }
        Ok(ty)
    }

    fn block(&mut self) -> Result<Block, Diagnostic> {
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        loop {
            if self.is_punct("}") {
                let end = self.advance();
                return Ok(Block { stmts, end_line: end.line });
            }
            if *self.peek() == Tok::Eof {
                return self.error("expected `}` before end of input");
            }
            stmts.push(self.stmt()?);
        }
    }

    /// A braced block, or a single statement wrapped as one.
    fn body(&mut self) -> Result<Block, Diagnostic> {
        if self.is_punct("{") {
            self.block()
        } else {
            let stmt = self.stmt()?;
            let end_line = stmt.line;
            Ok(Block { stmts: vec![stmt], end_line })
        }
    }

    fn looks_like_decl(&self) -> bool {
        let Tok::Ident(first) = self.peek() else { return false };
        match (self.dialect, first.as_str()) {
            (_, "int" | "char" | "void") => return true,
            (Dialect::Java, "boolean" | "String") => return true,
            (Dialect::Cpp, "bool" | "string" | "std" | "struct" | "const") => return true,
            _ if is_reserved(first, self.dialect) => return false,
            _ => {}
        }
        let mut k = 1;
        match self.dialect {
            Dialect::Java => {
                while matches!(self.peek_at(k), Tok::Punct("[")) && matches!(self.peek_at(k + 1), Tok::Punct("]")) {
                    k += 2;
                }
            }
            Dialect::Cpp => {
                while matches!(self.peek_at(k), Tok::Punct("*")) {
                    k += 1;
                }
            }
        }
        matches!(self.peek_at(k), Tok::Ident(_))
            && matches!(self.peek_at(k + 1), Tok::Punct("=" | ";"))
    }

    fn stmt(&mut self) -> Result<Stmt, Diagnostic> {
        let (line, col) = self.here();
        let kind = if self.is_punct("{") {
            StmtKind::Block(self.block()?)
        } else if self.eat_kw("if") {
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            let then_branch = self.body()?;
            let else_branch = if self.eat_kw("else") { Some(self.body()?) } else { None };
            StmtKind::If { cond, then_branch, else_branch }
        } else if self.eat_kw("while") {
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            StmtKind::While { cond, body: self.body()? }
        } else if self.eat_kw("for") {
            self.expect_punct("(")?;
            let init = if self.is_punct(";") { None } else { Some(Box::new(self.simple_stmt()?)) };
            self.expect_punct(";")?;
            let cond = if self.is_punct(";") { None } else { Some(self.expr()?) };
            self.expect_punct(";")?;
            let update = if self.is_punct(")") { None } else { Some(Box::new(self.simple_stmt()?)) };
            self.expect_punct(")")?;
            StmtKind::For { init, cond, update, body: self.body()? }
        } else if self.eat_kw("return") {
            let value = if self.is_punct(";") { None } else { Some(self.expr()?) };
            self.expect_punct(";")?;
            StmtKind::Return(value)
        } else {
            let s = self.simple_stmt()?;
            self.expect_punct(";")?;
            return Ok(s);
        };
        Ok(Stmt { kind, line, col })
    }

    /// Declaration, assignment, increment or call, without the trailing `;`.
    fn simple_stmt(&mut self) -> Result<Stmt, Diagnostic> {
        let (line, col) = self.here();
        if self.looks_like_decl() {
            let ty = self.parse_type()?;
            let (name, _, _) = self.ident()?;
            let init = if self.eat_punct("=") { Some(self.expr()?) } else { None };
            return Ok(Stmt { kind: StmtKind::VarDecl { ty, name, init }, line, col });
        }
        for (p, op) in [("++", AssignOp::Add), ("--", AssignOp::Sub)] {
            if self.eat_punct(p) {
                let target = self.unary()?;
                let one = Expr { kind: ExprKind::Int(1), line, col };
                return Ok(Stmt { kind: StmtKind::Assign { target, op, value: one }, line, col });
            }
        }
        let target = self.expr()?;
        for (p, op) in [("++", AssignOp::Add), ("--", AssignOp::Sub)] {
            if self.eat_punct(p) {
                let one = Expr { kind: ExprKind::Int(1), line, col };
                return Ok(Stmt { kind: StmtKind::Assign { target, op, value: one }, line, col });
            }
        }
        let assign = [
            ("=", AssignOp::Set),
            ("+=", AssignOp::Add),
            ("-=", AssignOp::Sub),
            ("*=", AssignOp::Mul),
            ("/=", AssignOp::Div),
            ("%=", AssignOp::Rem),
        ];
        for (p, op) in assign {
            if self.eat_punct(p) {
                let value = self.expr()?;
                return Ok(Stmt { kind: StmtKind::Assign { target, op, value }, line, col });
            }
        }
        Ok(Stmt { kind: StmtKind::Expr(target), line, col })
    }

    // ---- expressions ----

    pub fn expr(&mut self) -> Result<Expr, Diagnostic> {
        self.binary(0)
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, Diagnostic> {
        let mut lhs = self.unary()?;
        while let Some((op, prec)) = self.peek_binop() {
            if prec < min_prec {
                break;
            }
            let t = self.advance();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr {
                kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) },
                line: t.line,
                col: t.col,
            };
        }
        Ok(lhs)
    }

    fn peek_binop(&self) -> Option<(BinOp, u8)> {
        let Tok::Punct(p) = self.peek() else { return None };
        Some(match *p {
            "||" => (BinOp::Or, 1),
            "&&" => (BinOp::And, 2),
            "==" => (BinOp::Eq, 3),
            "!=" => (BinOp::Ne, 3),
            "<" => (BinOp::Lt, 4),
            "<=" => (BinOp::Le, 4),
            ">" => (BinOp::Gt, 4),
            ">=" => (BinOp::Ge, 4),
            "+" => (BinOp::Add, 5),
            "-" => (BinOp::Sub, 5),
            "*" => (BinOp::Mul, 6),
            "/" => (BinOp::Div, 6),
            "%" => (BinOp::Rem, 6),
            _ => return None,
        })
    }

    fn unary(&mut self) -> Result<Expr, Diagnostic> {
        let (line, col) = self.here();
        let wrap = |kind| Expr { kind, line, col };
        if self.eat_punct("!") {
            let e = self.unary()?;
            return Ok(wrap(ExprKind::Unary { op: UnOp::Not, operand: Box::new(e) }));
        }
        if self.eat_punct("-") {
            let e = self.unary()?;
            return Ok(wrap(ExprKind::Unary { op: UnOp::Neg, operand: Box::new(e) }));
        }
        if self.is_punct("*") || self.is_punct("&") {
            if self.dialect == Dialect::Java {
                return self.error("pointers are not available in the java dialect");
            }
            let deref = self.eat_punct("*");
            if !deref {
                self.advance();
            }
            let e = Box::new(self.unary()?);
            return Ok(wrap(if deref { ExprKind::Deref(e) } else { ExprKind::AddrOf(e) }));
        }
        if self.dialect == Dialect::Cpp && self.is_punct("(") && self.looks_like_cast() {
            self.advance();
            let ty = self.parse_type()?;
            self.expect_punct(")")?;
            let operand = self.unary()?;
            return match operand.kind {
                ExprKind::New { ty: inner, zeroed } if TypeExpr::Pointer(Box::new(inner.clone())) == ty => {
                    Ok(Expr { kind: ExprKind::New { ty: inner, zeroed }, line, col })
                }
                _ => Err(Diagnostic::syntax(line, col, "casts are only supported on malloc results")),
            };
        }
        self.postfix()
    }

    fn looks_like_cast(&self) -> bool {
        let base = match self.peek_at(1) {
            Tok::Ident(s) => s,
            _ => return false,
        };
        let mut k = 2;
        if base == "struct" {
            k += 1;
        } else if matches!(base.as_str(), "int" | "char" | "bool" | "void" | "string") {
        } else if is_reserved(base, self.dialect) {
            return false;
        }
        if !matches!(self.peek_at(k), Tok::Punct("*")) {
            return false;
        }
        while matches!(self.peek_at(k), Tok::Punct("*")) {
            k += 1;
        }
        matches!(self.peek_at(k), Tok::Punct(")"))
    }

    fn postfix(&mut self) -> Result<Expr, Diagnostic> {
        let mut e = self.primary()?;
        loop {
            let (line, col) = self.here();
            let arrow = self.is_punct("->");
            if self.is_punct(".") || arrow {
                if arrow && self.dialect == Dialect::Java {
                    return self.error("`->` is not available in the java dialect");
                }
                self.advance();
                let (field, _, _) = self.ident()?;
                if self.is_punct("(") {
                    let qualifier = match e.kind {
                        ExprKind::Var(ref class) if !arrow => class.clone(),
                        _ => return self.error("only static methods can be called"),
                    };
                    let args = self.args()?;
                    e = Expr {
                        kind: ExprKind::Call { qualifier: Some(qualifier), name: field, args },
                        line: e.line,
                        col: e.col,
                    };
                    continue;
                }
                e = Expr { kind: ExprKind::Field { object: Box::new(e), field, arrow }, line, col };
            } else {
                return Ok(e);
            }
        }
    }

    fn args(&mut self) -> Result<Vec<Expr>, Diagnostic> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.eat_punct(")") {
            loop {
                args.push(self.expr()?);
                if self.eat_punct(")") {
                    break;
                }
                self.expect_punct(",")?;
            }
        }
        Ok(args)
    }

    fn primary(&mut self) -> Result<Expr, Diagnostic> {
        let (line, col) = self.here();
        let wrap = |kind| Ok(Expr { kind, line, col });
        match self.peek().clone() {
            Tok::Int(n) => {
                self.advance();
                wrap(ExprKind::Int(n))
            }
            Tok::Char(c) => {
                self.advance();
                wrap(ExprKind::Char(c))
            }
            Tok::Str(s) => {
                self.advance();
                wrap(ExprKind::Str(s))
            }
            Tok::Punct("(") => {
                self.advance();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(s) => match (self.dialect, s.as_str()) {
                (_, "true") | (_, "false") => {
                    self.advance();
                    wrap(ExprKind::Bool(s == "true"))
                }
                (Dialect::Java, "null") | (Dialect::Cpp, "nullptr" | "NULL") => {
                    self.advance();
                    wrap(ExprKind::Null)
                }
                (_, "new") => {
                    self.advance();
                    let ty = self.base_type()?;
                    let zeroed = match self.dialect {
                        Dialect::Java => {
                            self.expect_punct("(")?;
                            self.expect_punct(")")?;
                            true
                        }
                        Dialect::Cpp => {
                            if self.eat_punct("(") {
                                self.expect_punct(")")?;
                                true
                            } else {
                                false
                            }
                        }
                    };
                    wrap(ExprKind::New { ty, zeroed })
                }
                (Dialect::Cpp, "malloc") => {
                    self.advance();
                    self.expect_punct("(")?;
                    self.expect_kw("sizeof")?;
                    self.expect_punct("(")?;
                    let ty = self.base_type()?;
                    self.expect_punct(")")?;
                    self.expect_punct(")")?;
                    wrap(ExprKind::New { ty, zeroed: false })
                }
                _ => {
                    let (name, _, _) = self.ident()?;
                    if self.is_punct("(") {
                        let args = self.args()?;
                        wrap(ExprKind::Call { qualifier: None, name, args })
                    } else {
                        wrap(ExprKind::Var(name))
                    }
                }
            },
            _ => self.error(format!("expected expression, found {}", self.describe())),
        }
    }
}

fn is_reserved(s: &str, dialect: Dialect) -> bool {
    const COMMON: &[&str] = &[
        "if", "else", "while", "for", "return", "new", "true", "false", "int", "char", "void",
    ];
    const JAVA: &[&str] = &[
        "class", "public", "private", "protected", "static", "final", "null", "boolean", "String",
    ];
    const CPP: &[&str] = &[
        "struct", "nullptr", "NULL", "bool", "string", "malloc", "sizeof", "const", "using",
        "namespace", "std",
    ];
    COMMON.contains(&s)
        || match dialect {
            Dialect::Java => JAVA.contains(&s),
            Dialect::Cpp => CPP.contains(&s),
        }
}
