//! Syntax tree shared by both dialects.

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeExpr {
    Int,
    Char,
    Bool,
    Str,
    Void,
    Named(String),
    Pointer(Box<TypeExpr>),
    Array(Box<TypeExpr>),
}

#[derive(Debug, Clone)]
pub struct RecordDecl {
    pub name: String,
    pub fields: Vec<FieldDecl>,
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone)]
pub struct FieldDecl {
    pub ty: TypeExpr,
    pub name: String,
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone)]
pub struct Param {
    pub ty: TypeExpr,
    pub name: String,
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone)]
pub struct FunctionDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: TypeExpr,
    pub body: Block,
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone)]
pub struct GlobalDecl {
    pub ty: TypeExpr,
    pub name: String,
    pub init: Option<Expr>,
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    /// Line of the closing brace.
    pub end_line: u32,
}

#[derive(Debug, Clone)]
pub struct Stmt {
    pub kind: StmtKind,
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignOp {
    Set,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

#[derive(Debug, Clone)]
pub enum StmtKind {
    VarDecl {
        ty: TypeExpr,
        name: String,
        init: Option<Expr>,
    },
    Assign {
        target: Expr,
        op: AssignOp,
        value: Expr,
    },
    Expr(Expr),
    Return(Option<Expr>),
    If {
        cond: Expr,
        then_branch: Block,
        else_branch: Option<Block>,
    },
    While {
        cond: Expr,
        body: Block,
    },
    /// `for (init; cond; update) body`, kept as its own node so every part
    /// pauses on the header line.
    For {
        init: Option<Box<Stmt>>,
        cond: Option<Expr>,
        update: Option<Box<Stmt>>,
        body: Block,
    },
    Block(Block),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone)]
pub enum ExprKind {
    Int(i64),
    Char(char),
    Str(String),
    Bool(bool),
    Null,
    Var(String),
    Field {
        object: Box<Expr>,
        field: String,
        arrow: bool,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Unary {
        op: UnOp,
        operand: Box<Expr>,
    },
    Call {
        /// `Class.f(..)` in java; checked against known class names.
        qualifier: Option<String>,
        name: String,
        args: Vec<Expr>,
    },
    /// `new T()` / `new T` / `malloc(sizeof(T))`; `zeroed` is true when the
    /// allocation value-initializes its storage.
    New {
        ty: TypeExpr,
        zeroed: bool,
    },
    AddrOf(Box<Expr>),
    Deref(Box<Expr>),
}

impl Expr {
    pub fn contains_call(&self) -> bool {
        match &self.kind {
            ExprKind::Call { .. } => true,
            ExprKind::Field { object, .. } => object.contains_call(),
            ExprKind::Binary { lhs, rhs, .. } => lhs.contains_call() || rhs.contains_call(),
            ExprKind::Unary { operand, .. } => operand.contains_call(),
            ExprKind::AddrOf(e) | ExprKind::Deref(e) => e.contains_call(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Ast {
    pub records: Vec<RecordDecl>,
    pub functions: Vec<FunctionDecl>,
    pub globals: Vec<GlobalDecl>,
}
