use std::fmt;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Byte range `[start, end)` into the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scalar {
    Int,
    Double,
}

impl Scalar {
    pub fn size(self) -> i64 {
        match self {
            Scalar::Int => 4,
            Scalar::Double => 8,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Scalar::Int => "int",
            Scalar::Double => "double",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Type {
    Void,
    Scalar(Scalar),
    Ptr(Scalar),
}

impl Type {
    pub const INT: Type = Type::Scalar(Scalar::Int);
    pub const DOUBLE: Type = Type::Scalar(Scalar::Double);

    pub fn size(self) -> i64 {
        match self {
            Type::Void => 1,
            Type::Scalar(s) => s.size(),
            Type::Ptr(_) => 8,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Void => f.write_str("void"),
            Type::Scalar(s) => f.write_str(s.keyword()),
            Type::Ptr(s) => write!(f, "{} *", s.keyword()),
        }
    }
}

pub type DeclId = usize;
pub type LoopId = usize;

/// A variable declaration site (parameter or local).
#[derive(Debug, Clone, PartialEq)]
pub struct DeclInfo {
    pub id: DeclId,
    pub function: String,
    pub name: String,
    pub scope: usize,
    pub ty: Type,
    pub loc: Loc,
    /// Covers the type keyword and, for pointers, the `*`.
    pub type_span: Span,
    pub is_param: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub functions: Vec<Function>,
    pub decls: Vec<DeclInfo>,
    pub loop_count: usize,
    pub source: String,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn main(&self) -> &Function {
        self.function("main").expect("parser guarantees a main function")
    }

    pub fn decl(&self, id: DeclId) -> &DeclInfo {
        &self.decls[id]
    }

    /// Declarations named `name` inside `function`, in source order.
    pub fn find_decls<'a>(&'a self, function: &'a str, name: &'a str) -> impl Iterator<Item = &'a DeclInfo> {
        self.decls
            .iter()
            .filter(move |d| d.function == function && d.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    pub name: String,
    pub ret: Type,
    pub ret_span: Span,
    pub params: Vec<DeclId>,
    pub body: Vec<Stmt>,
    pub loc: Loc,
    pub body_open: Span,
    pub body_close: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub loc: Loc,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignOp {
    Set,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl AssignOp {
    pub fn binop(self) -> Option<BinOp> {
        match self {
            AssignOp::Set => None,
            AssignOp::Add => Some(BinOp::Add),
            AssignOp::Sub => Some(BinOp::Sub),
            AssignOp::Mul => Some(BinOp::Mul),
            AssignOp::Div => Some(BinOp::Div),
            AssignOp::Mod => Some(BinOp::Mod),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LValue {
    Var { name: String, decl: DeclId },
    Index { name: String, decl: DeclId, index: Box<Expr> },
}

impl LValue {
    pub fn decl(&self) -> DeclId {
        match self {
            LValue::Var { decl, .. } | LValue::Index { decl, .. } => *decl,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopHeader {
    pub id: LoopId,
    /// Byte offset just past the closing `)` of the loop header.
    pub header_end: usize,
    /// Expression of a `#perf iterations(...)` line preceding the loop.
    pub annotation: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Decl {
        decl: DeclId,
        init: Option<Expr>,
    },
    Assign {
        target: LValue,
        op: AssignOp,
        value: Expr,
    },
    IncDec {
        target: LValue,
        delta: i64,
    },
    If {
        cond: Expr,
        then: Box<Stmt>,
        els: Option<Box<Stmt>>,
    },
    For {
        header: LoopHeader,
        init: Box<Stmt>,
        cond: Expr,
        step: Box<Stmt>,
        body: Box<Stmt>,
    },
    While {
        header: LoopHeader,
        cond: Expr,
        body: Box<Stmt>,
    },
    Return(Option<Expr>),
    Block(Vec<Stmt>),
    Expr(Expr),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
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
            BinOp::Mod => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 6,
        }
    }

    pub fn is_arithmetic(self) -> bool {
        self.precedence() >= 5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Free,
    Allreduce,
    Send,
    Recv,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Free => "free",
            Builtin::Allreduce => "MPI_Allreduce",
            Builtin::Send => "MPI_Send",
            Builtin::Recv => "MPI_Recv",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::Free => 1,
            Builtin::Allreduce => 6,
            Builtin::Send | Builtin::Recv => 6,
        }
    }
}

/// Named MPI constants. Datatypes carry their byte size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpiConst {
    Double,
    Int,
    Sum,
    Prod,
    Max,
    Min,
    CommWorld,
}

impl MpiConst {
    pub fn from_name(name: &str) -> Option<MpiConst> {
        Some(match name {
            "MPI_DOUBLE" => MpiConst::Double,
            "MPI_INT" => MpiConst::Int,
            "MPI_SUM" => MpiConst::Sum,
            "MPI_PROD" => MpiConst::Prod,
            "MPI_MAX" => MpiConst::Max,
            "MPI_MIN" => MpiConst::Min,
            "MPI_COMM_WORLD" => MpiConst::CommWorld,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            MpiConst::Double => "MPI_DOUBLE",
            MpiConst::Int => "MPI_INT",
            MpiConst::Sum => "MPI_SUM",
            MpiConst::Prod => "MPI_PROD",
            MpiConst::Max => "MPI_MAX",
            MpiConst::Min => "MPI_MIN",
            MpiConst::CommWorld => "MPI_COMM_WORLD",
        }
    }

    pub fn datatype_size(self) -> Option<i64> {
        match self {
            MpiConst::Double => Some(8),
            MpiConst::Int => Some(4),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub loc: Loc,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Float(f64),
    Var {
        name: String,
        decl: DeclId,
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
    Index {
        name: String,
        decl: DeclId,
        index: Box<Expr>,
    },
    Call {
        name: String,
        args: Vec<Expr>,
    },
    Builtin {
        kind: Builtin,
        args: Vec<Expr>,
    },
    /// Only legal as the whole right-hand side of a pointer declaration or
    /// assignment; `elem` is the target's element type.
    Malloc {
        size: Box<Expr>,
        elem: Scalar,
        name_span: Span,
    },
    SizeofType(Type),
    /// `sizeof(*p)`: element size of `p`.
    SizeofDeref {
        name: String,
        decl: DeclId,
    },
    SizeofVar {
        name: String,
        decl: DeclId,
    },
    AddrOf {
        name: String,
        decl: DeclId,
    },
    Mpi(MpiConst),
}

impl Expr {
    pub fn synthetic(kind: ExprKind, loc: Loc) -> Expr {
        Expr {
            kind,
            loc,
            span: Span::default(),
        }
    }

    /// Calls `f` on this expression and every subexpression, parents first.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            ExprKind::Unary { operand, .. } => operand.walk(f),
            ExprKind::Index { index, .. } => index.walk(f),
            ExprKind::Call { args, .. } | ExprKind::Builtin { args, .. } => {
                for a in args {
                    a.walk(f);
                }
            }
            ExprKind::Malloc { size, .. } => size.walk(f),
            _ => {}
        }
    }

    fn precedence(&self) -> u8 {
        match &self.kind {
            ExprKind::Binary { op, .. } => op.precedence(),
            ExprKind::Unary { .. } => 7,
            _ => 8,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Int(v) => write!(f, "{v}"),
            ExprKind::Float(v) => write!(f, "{v:?}"),
            ExprKind::Var { name, .. } => f.write_str(name),
            ExprKind::Binary { op, lhs, rhs } => {
                let p = op.precedence();
                if lhs.precedence() < p {
                    write!(f, "({lhs})")?;
                } else {
                    write!(f, "{lhs}")?;
                }
                write!(f, " {} ", op.symbol())?;
                // left-associative: equal precedence on the right needs parens
                if rhs.precedence() <= p {
                    write!(f, "({rhs})")
                } else {
                    write!(f, "{rhs}")
                }
            }
            ExprKind::Unary { op, operand } => {
                f.write_str(match op {
                    UnOp::Neg => "-",
                    UnOp::Not => "!",
                })?;
                if operand.precedence() < 7 {
                    write!(f, "({operand})")
                } else {
                    write!(f, "{operand}")
                }
            }
            ExprKind::Index { name, index, .. } => write!(f, "{name}[{index}]"),
            ExprKind::Call { name, args } => write_call(f, name, args),
            ExprKind::Builtin { kind, args } => write_call(f, kind.name(), args),
            ExprKind::Malloc { size, .. } => write!(f, "malloc({size})"),
            ExprKind::SizeofType(t) => write!(f, "sizeof({t})"),
            ExprKind::SizeofDeref { name, .. } => write!(f, "sizeof(*{name})"),
            ExprKind::SizeofVar { name, .. } => write!(f, "sizeof({name})"),
            ExprKind::AddrOf { name, .. } => write!(f, "&{name}"),
            ExprKind::Mpi(c) => f.write_str(c.name()),
        }
    }
}

fn write_call(f: &mut fmt::Formatter<'_>, name: &str, args: &[Expr]) -> fmt::Result {
    write!(f, "{name}(")?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{a}")?;
    }
    f.write_str(")")
}

impl Stmt {
    /// Visits this statement and all nested statements, parents first.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        f(self);
        match &self.kind {
            StmtKind::If { then, els, .. } => {
                then.walk(f);
                if let Some(e) = els {
                    e.walk(f);
                }
            }
            StmtKind::For { init, step, body, .. } => {
                init.walk(f);
                step.walk(f);
                body.walk(f);
            }
            StmtKind::While { body, .. } => body.walk(f),
            StmtKind::Block(stmts) => {
                for s in stmts {
                    s.walk(f);
                }
            }
            _ => {}
        }
    }

    /// Expressions owned directly by this statement (not by nested ones).
    pub fn exprs(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        match &self.kind {
            StmtKind::Decl { init, .. } => out.extend(init.iter()),
            StmtKind::Assign { target, value, .. } => {
                if let LValue::Index { index, .. } = target {
                    out.push(index.as_ref());
                }
                out.push(value);
            }
            StmtKind::IncDec { target, .. } => {
                if let LValue::Index { index, .. } = target {
                    out.push(index.as_ref());
                }
            }
            StmtKind::If { cond, .. } => out.push(cond),
            StmtKind::For { cond, header, .. } | StmtKind::While { cond, header, .. } => {
                out.push(cond);
                out.extend(header.annotation.iter());
            }
            StmtKind::Return(e) => out.extend(e.iter()),
            StmtKind::Expr(e) => out.push(e),
            StmtKind::Block(_) => {}
        }
        out
    }
}

impl Function {
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        for s in &self.body {
            s.walk(f);
        }
    }
}
