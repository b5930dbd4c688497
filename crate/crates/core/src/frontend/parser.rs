//! Recursive-descent parser for PerfC. Variables are resolved to their
//! declaration sites while parsing; calls are checked once all functions
//! are known.

use std::collections::HashMap;

use super::ast::*;
use super::lexer::{lex, Kw, Tok, Token};
use super::Diagnostic;

type PResult<T> = Result<T, Diagnostic>;

const BUILTIN_NAMES: &[&str] = &["malloc", "free", "MPI_Allreduce", "MPI_Send", "MPI_Recv"];

pub fn parse(source: &str) -> Result<Program, Vec<Diagnostic>> {
    let toks = lex(source).map_err(|d| vec![d])?;
    let mut p = Parser {
        toks,
        pos: 0,
        prev_end: 0,
        decls: Vec::new(),
        scopes: Vec::new(),
        next_scope: 0,
        function: String::new(),
        loops: 0,
    };
    let mut functions = Vec::new();
    while p.peek() != &Tok::Eof {
        functions.push(p.function().map_err(|d| vec![d])?);
    }
    let program = Program {
        functions,
        decls: p.decls,
        loop_count: p.loops,
        source: source.to_string(),
    };
    let diags = check_program(&program);
    if diags.is_empty() {
        Ok(program)
    } else {
        Err(diags)
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Int(v) => format!("integer `{v}`"),
        Tok::Float(v) => format!("number `{v}`"),
        Tok::Kw(k) => format!("keyword `{}`", format!("{k:?}").to_lowercase()),
        Tok::Unsupported(w) => format!("`{w}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Perf => "`#perf`".to_string(),
        Tok::Eof => "end of input".to_string(),
    }
}

fn unsupported(loc: Loc, what: &str) -> Diagnostic {
    Diagnostic::error(loc, format!("unsupported construct: {what}"))
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    prev_end: usize,
    decls: Vec<DeclInfo>,
    scopes: Vec<(usize, HashMap<String, DeclId>)>,
    next_scope: usize,
    function: String,
    loops: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn here(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        self.prev_end = t.span.end;
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<Token> {
        if self.is_sym(s) {
            Ok(self.bump())
        } else {
            Err(self.error_expected(&format!("`{s}`")))
        }
    }

    fn error_expected(&self, what: &str) -> Diagnostic {
        let t = self.here();
        if let Tok::Unsupported(w) = t.tok {
            return unsupported(t.loc, &format!("`{w}`"));
        }
        Diagnostic::error(t.loc, format!("expected {what}, found {}", describe(&t.tok)))
    }

    fn expect_ident(&mut self) -> PResult<(String, Token)> {
        match self.peek().clone() {
            Tok::Ident(name) => Ok((name, self.bump())),
            _ => Err(self.error_expected("an identifier")),
        }
    }

    fn span_from(&self, start: usize) -> Span {
        Span {
            start,
            end: self.prev_end,
        }
    }

    fn push_scope(&mut self) {
        self.scopes.push((self.next_scope, HashMap::new()));
        self.next_scope += 1;
    }

    fn pop_scope(&mut self) {
        self.scopes.pop();
    }

    fn declare(&mut self, name: &str, ty: Type, type_span: Span, loc: Loc, is_param: bool) -> PResult<DeclId> {
        let (scope, names) = self.scopes.last_mut().expect("inside a scope");
        if names.contains_key(name) {
            return Err(Diagnostic::error(loc, format!("redeclaration of `{name}`")));
        }
        let id = self.decls.len();
        names.insert(name.to_string(), id);
        let scope = *scope;
        self.decls.push(DeclInfo {
            id,
            function: self.function.clone(),
            name: name.to_string(),
            scope,
            ty,
            loc,
            type_span,
            is_param,
        });
        Ok(id)
    }

    fn resolve(&self, name: &str, loc: Loc) -> PResult<DeclId> {
        self.scopes
            .iter()
            .rev()
            .find_map(|(_, names)| names.get(name).copied())
            .ok_or_else(|| Diagnostic::error(loc, format!("use of undeclared variable `{name}`")))
    }

    fn at_type(&self) -> bool {
        matches!(self.peek(), Tok::Kw(Kw::Int | Kw::Double | Kw::Void))
    }

    fn parse_type(&mut self) -> PResult<(Type, Span)> {
        let t = self.bump();
        let scalar = match t.tok {
            Tok::Kw(Kw::Int) => Some(Scalar::Int),
            Tok::Kw(Kw::Double) => Some(Scalar::Double),
            Tok::Kw(Kw::Void) => None,
            Tok::Unsupported(w) => return Err(unsupported(t.loc, &format!("type `{w}`"))),
            other => {
                return Err(Diagnostic::error(
                    t.loc,
                    format!("expected a type, found {}", describe(&other)),
                ))
            }
        };
        let mut span = t.span;
        if self.is_sym("*") {
            let star = self.bump();
            span.end = star.span.end;
            if self.is_sym("*") {
                return Err(unsupported(self.here().loc, "pointers to pointers"));
            }
            return match scalar {
                Some(s) => Ok((Type::Ptr(s), span)),
                None => Err(unsupported(t.loc, "void pointers")),
            };
        }
        Ok((scalar.map_or(Type::Void, Type::Scalar), span))
    }

    fn function(&mut self) -> PResult<Function> {
        let start = self.here().clone();
        if !self.at_type() {
            return Err(self.error_expected("a function definition"));
        }
        let (ret, ret_span) = self.parse_type()?;
        if self.is_sym("(") {
            return Err(unsupported(self.here().loc, "function pointers"));
        }
        let (name, _) = self.expect_ident()?;
        if BUILTIN_NAMES.contains(&name.as_str()) || name.starts_with("MPI_") {
            return Err(Diagnostic::error(start.loc, format!("`{name}` is a builtin and cannot be redefined")));
        }
        if !self.is_sym("(") {
            return Err(Diagnostic::error(
                self.here().loc,
                "global variables are not supported; expected a function definition",
            ));
        }
        self.bump();
        self.function = name.clone();
        self.push_scope();
        let mut params = Vec::new();
        if matches!(self.peek(), Tok::Kw(Kw::Void)) && matches!(self.peek_at(1), Tok::Sym(")")) {
            self.bump();
        } else if !self.is_sym(")") {
            loop {
                let ploc = self.here().loc;
                let (ty, span) = self.parse_type()?;
                if ty == Type::Void {
                    return Err(Diagnostic::error(ploc, "parameters cannot have type void"));
                }
                if self.is_sym("(") {
                    return Err(unsupported(self.here().loc, "function pointers"));
                }
                let (pname, ptok) = self.expect_ident()?;
                params.push(self.declare(&pname, ty, span, ptok.loc, true)?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        let body_open = self.expect_sym("{")?.span;
        let mut body = Vec::new();
        while !self.is_sym("}") {
            if self.peek() == &Tok::Eof {
                return Err(self.error_expected("`}`"));
            }
            body.push(self.stmt()?);
        }
        let body_close = self.bump().span;
        self.pop_scope();
        Ok(Function {
            name,
            ret,
            ret_span,
            params,
            body,
            loc: start.loc,
            body_open,
            body_close,
        })
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let start = self.here().clone();
        let kind = match self.peek().clone() {
            Tok::Sym("{") => {
                self.bump();
                self.push_scope();
                let mut stmts = Vec::new();
                while !self.is_sym("}") {
                    if self.peek() == &Tok::Eof {
                        return Err(self.error_expected("`}`"));
                    }
                    stmts.push(self.stmt()?);
                }
                self.bump();
                self.pop_scope();
                StmtKind::Block(stmts)
            }
            Tok::Sym(";") => {
                self.bump();
                StmtKind::Block(Vec::new())
            }
            Tok::Kw(Kw::If) => {
                self.bump();
                self.expect_sym("(")?;
                let cond = self.expr()?;
                self.expect_sym(")")?;
                let then = Box::new(self.stmt()?);
                let els = if matches!(self.peek(), Tok::Kw(Kw::Else)) {
                    self.bump();
                    Some(Box::new(self.stmt()?))
                } else {
                    None
                };
                StmtKind::If { cond, then, els }
            }
            Tok::Kw(Kw::For) => return self.for_stmt(None),
            Tok::Kw(Kw::While) => return self.while_stmt(None),
            Tok::Kw(Kw::Return) => {
                self.bump();
                let value = if self.is_sym(";") { None } else { Some(self.expr()?) };
                self.expect_sym(";")?;
                StmtKind::Return(value)
            }
            Tok::Kw(Kw::Int | Kw::Double | Kw::Void) => {
                let kind = self.decl()?;
                self.expect_sym(";")?;
                kind
            }
            Tok::Perf => return self.annotated_loop(),
            Tok::Kw(Kw::Else) => return Err(Diagnostic::error(start.loc, "`else` without `if`")),
            Tok::Unsupported(w) => return Err(unsupported(start.loc, &format!("`{w}`"))),
            _ => {
                let kind = self.simple()?;
                self.expect_sym(";")?;
                kind
            }
        };
        Ok(Stmt {
            kind,
            loc: start.loc,
            span: self.span_from(start.span.start),
        })
    }

    fn annotated_loop(&mut self) -> PResult<Stmt> {
        let perf = self.bump();
        match self.peek() {
            Tok::Ident(w) if w == "iterations" => {
                self.bump();
            }
            _ => return Err(self.error_expected("`iterations` after `#perf`")),
        }
        self.expect_sym("(")?;
        let annotation = self.expr()?;
        let close = self.expect_sym(")")?;
        if close.loc.line != perf.loc.line {
            return Err(Diagnostic::error(perf.loc, "`#perf iterations(...)` must fit on one line"));
        }
        let next = self.here();
        let is_loop = matches!(next.tok, Tok::Kw(Kw::For | Kw::While));
        if !is_loop || next.loc.line != perf.loc.line + 1 {
            return Err(Diagnostic::error(
                perf.loc,
                "`#perf iterations(...)` must be on the line directly before a loop",
            ));
        }
        if matches!(next.tok, Tok::Kw(Kw::For)) {
            self.for_stmt(Some(annotation))
        } else {
            self.while_stmt(Some(annotation))
        }
    }

    fn next_loop_id(&mut self) -> LoopId {
        self.loops += 1;
        self.loops - 1
    }

    fn for_stmt(&mut self, annotation: Option<Expr>) -> PResult<Stmt> {
        let start = self.bump();
        let id = self.next_loop_id();
        self.expect_sym("(")?;
        self.push_scope();
        let init_start = self.here().clone();
        let init_kind = if self.at_type() { self.decl()? } else { self.simple()? };
        let init = Box::new(Stmt {
            kind: init_kind,
            loc: init_start.loc,
            span: self.span_from(init_start.span.start),
        });
        self.expect_sym(";")?;
        let cond = self.expr()?;
        self.expect_sym(";")?;
        let step_start = self.here().clone();
        let step_kind = self.simple()?;
        let step = Box::new(Stmt {
            kind: step_kind,
            loc: step_start.loc,
            span: self.span_from(step_start.span.start),
        });
        let close = self.expect_sym(")")?;
        let body = Box::new(self.stmt()?);
        self.pop_scope();
        Ok(Stmt {
            kind: StmtKind::For {
                header: LoopHeader {
                    id,
                    header_end: close.span.end,
                    annotation,
                },
                init,
                cond,
                step,
                body,
            },
            loc: start.loc,
            span: self.span_from(start.span.start),
        })
    }

    fn while_stmt(&mut self, annotation: Option<Expr>) -> PResult<Stmt> {
        let start = self.bump();
        let id = self.next_loop_id();
        self.expect_sym("(")?;
        let cond = self.expr()?;
        let close = self.expect_sym(")")?;
        let body = Box::new(self.stmt()?);
        Ok(Stmt {
            kind: StmtKind::While {
                header: LoopHeader {
                    id,
                    header_end: close.span.end,
                    annotation,
                },
                cond,
                body,
            },
            loc: start.loc,
            span: self.span_from(start.span.start),
        })
    }

    fn decl(&mut self) -> PResult<StmtKind> {
        let tloc = self.here().loc;
        let (ty, type_span) = self.parse_type()?;
        if ty == Type::Void {
            return Err(Diagnostic::error(tloc, "variables cannot have type void"));
        }
        if self.is_sym("(") {
            return Err(unsupported(self.here().loc, "function pointers"));
        }
        let (name, tok) = self.expect_ident()?;
        if self.is_sym("[") {
            return Err(unsupported(self.here().loc, "fixed-size arrays (use malloc)"));
        }
        if self.is_sym("(") {
            return Err(unsupported(self.here().loc, "nested function declarations"));
        }
        // in scope before the initializer, so `sizeof(*p)` can name it
        let decl = self.declare(&name, ty, type_span, tok.loc, false)?;
        let init = if self.eat_sym("=") {
            Some(self.rhs(ty)?)
        } else {
            None
        };
        if self.is_sym(",") {
            return Err(unsupported(self.here().loc, "multiple declarators in one declaration"));
        }
        Ok(StmtKind::Decl { decl, init })
    }

    /// Right-hand side of an initialization or assignment to a `target`-typed
    /// location. This is the only place `malloc` may appear.
    fn rhs(&mut self, target: Type) -> PResult<Expr> {
        if matches!(self.peek(), Tok::Ident(w) if w == "malloc") {
            let start = self.bump();
            let Type::Ptr(elem) = target else {
                return Err(Diagnostic::error(start.loc, "malloc result must be assigned to a pointer"));
            };
            self.expect_sym("(")?;
            let size = self.expr()?;
            self.expect_sym(")")?;
            return Ok(Expr {
                kind: ExprKind::Malloc {
                    size: Box::new(size),
                    elem,
                    name_span: start.span,
                },
                loc: start.loc,
                span: self.span_from(start.span.start),
            });
        }
        self.expr()
    }

    fn lvalue_type(&self, lv: &LValue) -> Type {
        match lv {
            LValue::Var { decl, .. } => self.decls[*decl].ty,
            LValue::Index { decl, .. } => match self.decls[*decl].ty {
                Type::Ptr(s) => Type::Scalar(s),
                t => t,
            },
        }
    }

    fn to_lvalue(&self, e: Expr) -> PResult<LValue> {
        match e.kind {
            ExprKind::Var { name, decl } => Ok(LValue::Var { name, decl }),
            ExprKind::Index { name, decl, index } => Ok(LValue::Index { name, decl, index }),
            _ => Err(Diagnostic::error(e.loc, "invalid assignment target")),
        }
    }

    /// Assignment, increment/decrement, or expression statement.
    fn simple(&mut self) -> PResult<StmtKind> {
        if self.is_sym("++") || self.is_sym("--") {
            let op = self.bump();
            let loc = self.here().loc;
            let target = self.postfix_expr()?;
            let target = self.to_lvalue(target)?;
            self.check_incdec(&target, loc)?;
            let delta = if op.tok == Tok::Sym("++") { 1 } else { -1 };
            return Ok(StmtKind::IncDec { target, delta });
        }
        let e = self.expr()?;
        let loc = e.loc;
        let op = match self.peek() {
            Tok::Sym("=") => Some(AssignOp::Set),
            Tok::Sym("+=") => Some(AssignOp::Add),
            Tok::Sym("-=") => Some(AssignOp::Sub),
            Tok::Sym("*=") => Some(AssignOp::Mul),
            Tok::Sym("/=") => Some(AssignOp::Div),
            Tok::Sym("%=") => Some(AssignOp::Mod),
            _ => None,
        };
        if let Some(op) = op {
            let target = self.to_lvalue(e)?;
            self.bump();
            let ty = self.lvalue_type(&target);
            if op != AssignOp::Set && matches!(ty, Type::Ptr(_)) {
                return Err(unsupported(loc, "pointer arithmetic beyond indexing"));
            }
            let value = self.rhs(ty)?;
            return Ok(StmtKind::Assign { target, op, value });
        }
        if self.is_sym("++") || self.is_sym("--") {
            let op = self.bump();
            let target = self.to_lvalue(e)?;
            self.check_incdec(&target, loc)?;
            let delta = if op.tok == Tok::Sym("++") { 1 } else { -1 };
            return Ok(StmtKind::IncDec { target, delta });
        }
        Ok(StmtKind::Expr(e))
    }

    fn check_incdec(&self, target: &LValue, loc: Loc) -> PResult<()> {
        if matches!(self.lvalue_type(target), Type::Ptr(_)) {
            return Err(unsupported(loc, "pointer arithmetic beyond indexing"));
        }
        Ok(())
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn peek_binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Sym("||") => BinOp::Or,
            Tok::Sym("&&") => BinOp::And,
            Tok::Sym("==") => BinOp::Eq,
            Tok::Sym("!=") => BinOp::Ne,
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            Tok::Sym("+") => BinOp::Add,
            Tok::Sym("-") => BinOp::Sub,
            Tok::Sym("*") => BinOp::Mul,
            Tok::Sym("/") => BinOp::Div,
            Tok::Sym("%") => BinOp::Mod,
            _ => return None,
        })
    }

    fn is_pointer(&self, e: &Expr) -> bool {
        match &e.kind {
            ExprKind::Var { decl, .. } => matches!(self.decls[*decl].ty, Type::Ptr(_)),
            ExprKind::AddrOf { .. } | ExprKind::Malloc { .. } => true,
            _ => false,
        }
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let start = self.here().span.start;
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let op_loc = self.bump().loc;
            let rhs = self.binary(prec + 1)?;
            if self.is_pointer(&lhs) || self.is_pointer(&rhs) {
                return Err(unsupported(op_loc, "pointer arithmetic beyond indexing"));
            }
            lhs = Expr {
                loc: lhs.loc,
                kind: ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span: self.span_from(start),
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let t = self.here().clone();
        let op = match t.tok {
            Tok::Sym("-") => UnOp::Neg,
            Tok::Sym("!") => UnOp::Not,
            Tok::Sym("+") => {
                self.bump();
                return self.unary();
            }
            Tok::Sym("&") => {
                return Err(Diagnostic::error(
                    t.loc,
                    "address-of is only allowed as an argument of an MPI builtin",
                ))
            }
            Tok::Sym("*") => {
                return Err(unsupported(t.loc, "pointer dereference (use indexing)"));
            }
            _ => return self.postfix_expr(),
        };
        self.bump();
        let operand = self.unary()?;
        if self.is_pointer(&operand) {
            return Err(unsupported(t.loc, "pointer arithmetic beyond indexing"));
        }
        Ok(Expr {
            kind: ExprKind::Unary {
                op,
                operand: Box::new(operand),
            },
            loc: t.loc,
            span: self.span_from(t.span.start),
        })
    }

    fn postfix_expr(&mut self) -> PResult<Expr> {
        let t = self.here().clone();
        let kind = match t.tok.clone() {
            Tok::Int(v) => {
                self.bump();
                ExprKind::Int(v)
            }
            Tok::Float(v) => {
                self.bump();
                ExprKind::Float(v)
            }
            Tok::Sym("(") => {
                self.bump();
                let inner = self.expr()?;
                self.expect_sym(")")?;
                return Ok(Expr {
                    span: self.span_from(t.span.start),
                    ..inner
                });
            }
            Tok::Kw(Kw::Sizeof) => {
                self.bump();
                self.expect_sym("(")?;
                let kind = if self.at_type() {
                    ExprKind::SizeofType(self.parse_type()?.0)
                } else if self.eat_sym("*") {
                    let (name, tok) = self.expect_ident()?;
                    let decl = self.resolve(&name, tok.loc)?;
                    if !matches!(self.decls[decl].ty, Type::Ptr(_)) {
                        return Err(Diagnostic::error(tok.loc, format!("`{name}` is not a pointer")));
                    }
                    ExprKind::SizeofDeref { name, decl }
                } else {
                    let (name, tok) = self.expect_ident()?;
                    let decl = self.resolve(&name, tok.loc)?;
                    ExprKind::SizeofVar { name, decl }
                };
                self.expect_sym(")")?;
                kind
            }
            Tok::Ident(name) => {
                self.bump();
                self.ident_expr(name, &t)?
            }
            Tok::Unsupported(w) => return Err(unsupported(t.loc, &format!("`{w}`"))),
            _ => return Err(self.error_expected("an expression")),
        };
        Ok(Expr {
            kind,
            loc: t.loc,
            span: self.span_from(t.span.start),
        })
    }

    fn ident_expr(&mut self, name: String, t: &Token) -> PResult<ExprKind> {
        let builtin = match name.as_str() {
            "malloc" => {
                return Err(Diagnostic::error(
                    t.loc,
                    "malloc may only initialize or be assigned to a pointer variable",
                ))
            }
            "free" => Some(Builtin::Free),
            "MPI_Allreduce" => Some(Builtin::Allreduce),
            "MPI_Send" => Some(Builtin::Send),
            "MPI_Recv" => Some(Builtin::Recv),
            _ => None,
        };
        if let Some(kind) = builtin {
            self.expect_sym("(")?;
            let mut args = Vec::new();
            if !self.is_sym(")") {
                loop {
                    args.push(self.builtin_arg(kind)?);
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym(")")?;
            if args.len() != kind.arity() {
                return Err(Diagnostic::error(
                    t.loc,
                    format!("{} expects {} argument(s), got {}", kind.name(), kind.arity(), args.len()),
                ));
            }
            return Ok(ExprKind::Builtin { kind, args });
        }
        if name.starts_with("MPI_") {
            if self.is_sym("(") {
                return Err(unsupported(t.loc, &format!("MPI routine `{name}`")));
            }
            return MpiConst::from_name(&name)
                .map(ExprKind::Mpi)
                .ok_or_else(|| unsupported(t.loc, &format!("MPI constant `{name}`")));
        }
        if self.eat_sym("(") {
            let mut args = Vec::new();
            if !self.is_sym(")") {
                loop {
                    args.push(self.expr()?);
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym(")")?;
            return Ok(ExprKind::Call { name, args });
        }
        let decl = self.resolve(&name, t.loc)?;
        if self.eat_sym("[") {
            if !matches!(self.decls[decl].ty, Type::Ptr(_)) {
                return Err(Diagnostic::error(t.loc, format!("`{name}` is not a pointer and cannot be indexed")));
            }
            let index = self.expr()?;
            self.expect_sym("]")?;
            return Ok(ExprKind::Index {
                name,
                decl,
                index: Box::new(index),
            });
        }
        Ok(ExprKind::Var { name, decl })
    }

    fn builtin_arg(&mut self, kind: Builtin) -> PResult<Expr> {
        if kind != Builtin::Free && self.is_sym("&") {
            let amp = self.bump();
            let (name, tok) = self.expect_ident()?;
            let decl = self.resolve(&name, tok.loc)?;
            if !matches!(self.decls[decl].ty, Type::Scalar(_)) {
                return Err(Diagnostic::error(tok.loc, "address-of requires a scalar variable"));
            }
            return Ok(Expr {
                kind: ExprKind::AddrOf { name, decl },
                loc: amp.loc,
                span: self.span_from(amp.span.start),
            });
        }
        self.expr()
    }
}

/// Whole-program checks that need every function signature.
fn check_program(p: &Program) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut seen: HashMap<&str, &Function> = HashMap::new();
    for f in &p.functions {
        if seen.insert(&f.name, f).is_some() {
            diags.push(Diagnostic::error(f.loc, format!("duplicate definition of `{}`", f.name)));
        }
    }
    match p.functions.iter().find(|f| f.name == "main") {
        None => diags.push(Diagnostic::error(Loc { line: 1, col: 1 }, "program has no `main` function")),
        Some(main) => {
            for &d in &main.params {
                let decl = &p.decls[d];
                if decl.ty != Type::INT {
                    diags.push(Diagnostic::error(
                        decl.loc,
                        format!("parameter `{}` of main must have type int", decl.name),
                    ));
                }
            }
        }
    }
    for f in &p.functions {
        f.walk(&mut |s| {
            for e in s.exprs() {
                e.walk(&mut |e| {
                    if let ExprKind::Call { name, args } = &e.kind {
                        match seen.get(name.as_str()) {
                            None => diags.push(Diagnostic::error(e.loc, format!("call to undefined function `{name}`"))),
                            Some(callee) if callee.params.len() != args.len() => diags.push(Diagnostic::error(
                                e.loc,
                                format!(
                                    "`{name}` expects {} argument(s), got {}",
                                    callee.params.len(),
                                    args.len()
                                ),
                            )),
                            _ => {}
                        }
                    }
                });
            }
        });
    }
    diags
}
