//! Static analyses over a parsed program: which declarations carry tracked
//! types, and how each loop is extrapolated.

use std::collections::BTreeMap;

use super::ast::*;
use super::Diagnostic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Marker {
    Plain,
    TrackedInt,
    TrackedFloat,
    TrackedBlock,
}

impl Marker {
    pub fn is_tracked(self) -> bool {
        self != Marker::Plain
    }
}

/// Fixpoint of the trackedness propagation, one marker per declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackednessMap {
    markers: Vec<Marker>,
    returns: BTreeMap<String, Marker>,
}

impl TrackednessMap {
    pub fn marker(&self, decl: DeclId) -> Marker {
        self.markers[decl]
    }

    pub fn markers(&self) -> &[Marker] {
        &self.markers
    }

    /// Marker of the first declaration of `name` in `function`.
    pub fn lookup(&self, program: &Program, function: &str, name: &str) -> Option<Marker> {
        program.find_decls(function, name).next().map(|d| self.markers[d.id])
    }

    pub fn returns(&self, function: &str) -> Marker {
        self.returns.get(function).copied().unwrap_or(Marker::Plain)
    }

    /// True when `e` may evaluate to a tracked integer.
    pub fn is_tracked_int(&self, program: &Program, e: &Expr) -> bool {
        let mut found = false;
        e.walk(&mut |e| {
            found |= match &e.kind {
                ExprKind::Var { decl, .. } => self.markers[*decl] == Marker::TrackedInt,
                ExprKind::Call { name, .. } => self.returns(name) == Marker::TrackedInt,
                ExprKind::Index { decl, .. } => {
                    program.decls[*decl].ty == Type::Ptr(Scalar::Int)
                        && self.markers[*decl] == Marker::TrackedBlock
                }
                _ => false,
            }
        });
        found
    }

    fn is_block(&self, e: &Expr) -> bool {
        match &e.kind {
            ExprKind::Malloc { .. } => true,
            ExprKind::Var { decl, .. } => self.markers[*decl] == Marker::TrackedBlock,
            ExprKind::Call { name, .. } => self.returns(name) == Marker::TrackedBlock,
            _ => false,
        }
    }

    fn promote(&mut self, program: &Program, decl: DeclId, value: &Expr) -> bool {
        let want = match program.decls[decl].ty {
            Type::Scalar(Scalar::Int) if self.is_tracked_int(program, value) => Marker::TrackedInt,
            Type::Ptr(_) if self.is_block(value) => Marker::TrackedBlock,
            _ => return false,
        };
        if self.markers[decl] == Marker::Plain {
            self.markers[decl] = want;
            true
        } else {
            false
        }
    }

    fn promote_return(&mut self, program: &Program, function: &Function, value: &Expr) -> bool {
        let want = match function.ret {
            Type::Scalar(Scalar::Int) if self.is_tracked_int(program, value) => Marker::TrackedInt,
            Type::Ptr(_) if self.is_block(value) => Marker::TrackedBlock,
            _ => return false,
        };
        if self.returns(&function.name) == Marker::Plain {
            self.returns.insert(function.name.clone(), want);
            true
        } else {
            false
        }
    }
}

/// Seeds and propagates trackedness until nothing changes.
pub fn analyze_trackedness(program: &Program) -> TrackednessMap {
    analyze_trackedness_with_seeds(program, &[])
}

/// As [`analyze_trackedness`], additionally seeding the given integer
/// declarations as tracked.
pub fn analyze_trackedness_with_seeds(program: &Program, extra: &[DeclId]) -> TrackednessMap {
    let mut map = TrackednessMap {
        markers: program
            .decls
            .iter()
            .map(|d| match d.ty {
                Type::Scalar(Scalar::Double) => Marker::TrackedFloat,
                _ => Marker::Plain,
            })
            .collect(),
        returns: program
            .functions
            .iter()
            .filter(|f| f.ret == Type::DOUBLE)
            .map(|f| (f.name.clone(), Marker::TrackedFloat))
            .collect(),
    };
    let main_params = program.function("main").map(|f| f.params.as_slice()).unwrap_or(&[]);
    for &d in main_params.iter().chain(extra) {
        if program.decls[d].ty == Type::INT {
            map.markers[d] = Marker::TrackedInt;
        }
    }
    while propagation_pass(program, &mut map) {}
    map
}

/// One flow-insensitive pass over every assignment, call site and return.
/// Returns whether any marker changed. Markers only move from plain to
/// tracked, so repeated passes terminate.
pub fn propagation_pass(program: &Program, map: &mut TrackednessMap) -> bool {
    let mut changed = false;
    for f in &program.functions {
        f.walk(&mut |s| {
            match &s.kind {
                StmtKind::Decl { decl, init: Some(v) } => changed |= map.promote(program, *decl, v),
                StmtKind::Assign {
                    target: LValue::Var { decl, .. },
                    value,
                    ..
                } => changed |= map.promote(program, *decl, value),
                StmtKind::Return(Some(v)) => changed |= map.promote_return(program, f, v),
                _ => {}
            }
            for e in s.exprs() {
                e.walk(&mut |e| {
                    if let ExprKind::Call { name, args } = &e.kind {
                        if let Some(callee) = program.function(name) {
                            for (&param, arg) in callee.params.iter().zip(args) {
                                changed |= map.promote(program, param, arg);
                            }
                        }
                    }
                });
            }
        });
    }
    changed
}

/// How the profiler treats one loop.
#[derive(Debug, Clone, PartialEq)]
pub enum LoopAnnotation {
    /// Run every iteration; no extrapolation.
    Exact,
    /// Run at most the iteration cap and scale by this trip count.
    Trip(Expr),
}

struct Canonical<'a> {
    start: &'a Expr,
    bound: &'a Expr,
    cmp: BinOp,
    step: i64,
}

fn step_of(step: &Stmt, var: DeclId) -> Option<i64> {
    match &step.kind {
        StmtKind::IncDec {
            target: LValue::Var { decl, .. },
            delta,
        } if *decl == var => Some(*delta),
        StmtKind::Assign {
            target: LValue::Var { decl, .. },
            op,
            value,
        } if *decl == var => match (op, &value.kind) {
            (AssignOp::Add, ExprKind::Int(s)) => Some(*s),
            (AssignOp::Sub, ExprKind::Int(s)) => s.checked_neg(),
            (AssignOp::Set, ExprKind::Binary { op, lhs, rhs }) => match (&lhs.kind, &rhs.kind) {
                (ExprKind::Var { decl, .. }, ExprKind::Int(s)) if *decl == var => match op {
                    BinOp::Add => Some(*s),
                    BinOp::Sub => s.checked_neg(),
                    _ => None,
                },
                (ExprKind::Int(s), ExprKind::Var { decl, .. }) if *decl == var && *op == BinOp::Add => Some(*s),
                _ => None,
            },
            _ => None,
        },
        _ => None,
    }
}

fn assigns(body: &Stmt, var: DeclId) -> bool {
    let mut hit = false;
    body.walk(&mut |s| match &s.kind {
        StmtKind::Assign {
            target: LValue::Var { decl, .. },
            ..
        }
        | StmtKind::IncDec {
            target: LValue::Var { decl, .. },
            ..
        } => hit |= *decl == var,
        _ => {}
    });
    hit
}

fn canonical<'a>(init: &'a Stmt, cond: &'a Expr, step: &'a Stmt, body: &'a Stmt) -> Option<Canonical<'a>> {
    let (var, start) = match &init.kind {
        StmtKind::Decl { decl, init: Some(e) } => (*decl, e),
        StmtKind::Assign {
            target: LValue::Var { decl, .. },
            op: AssignOp::Set,
            value,
        } => (*decl, value),
        _ => return None,
    };
    let ExprKind::Binary { op, lhs, rhs } = &cond.kind else {
        return None;
    };
    let ExprKind::Var { decl, .. } = &lhs.kind else {
        return None;
    };
    if *decl != var {
        return None;
    }
    let step = step_of(step, var)?;
    let ok = match op {
        BinOp::Lt | BinOp::Le => step > 0,
        BinOp::Gt | BinOp::Ge => step < 0,
        _ => false,
    };
    let mut uses_var = false;
    rhs.walk(&mut |e| uses_var |= matches!(&e.kind, ExprKind::Var { decl, .. } if *decl == var));
    if !ok || uses_var || assigns(body, var) {
        return None;
    }
    Some(Canonical {
        start,
        bound: rhs,
        cmp: *op,
        step,
    })
}

fn int(v: i64, loc: Loc) -> Expr {
    Expr::synthetic(ExprKind::Int(v), loc)
}

fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    let loc = lhs.loc;
    Expr::synthetic(
        ExprKind::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        },
        loc,
    )
}

fn plus_const(e: Expr, k: i64) -> Expr {
    let loc = e.loc;
    match k.cmp(&0) {
        std::cmp::Ordering::Equal => e,
        std::cmp::Ordering::Greater => bin(BinOp::Add, e, int(k, loc)),
        std::cmp::Ordering::Less => bin(BinOp::Sub, e, int(-k, loc)),
    }
}

/// Iteration count of a canonical loop, `ceil(distance / |step|)` written
/// with integer division and folded where the start is a literal.
fn trip_expr(c: &Canonical<'_>) -> Expr {
    let stride = c.step.abs();
    let inclusive = matches!(c.cmp, BinOp::Le | BinOp::Ge);
    let extra = if inclusive { stride } else { stride - 1 };
    let loc = c.bound.loc;
    let distance = match (c.cmp, &c.start.kind) {
        (BinOp::Lt | BinOp::Le, ExprKind::Int(s)) => plus_const(c.bound.clone(), extra - s),
        (BinOp::Lt | BinOp::Le, _) => plus_const(bin(BinOp::Sub, c.bound.clone(), c.start.clone()), extra),
        (_, ExprKind::Int(s)) => bin(BinOp::Sub, int(s + extra, loc), c.bound.clone()),
        (_, _) if matches!(c.bound.kind, ExprKind::Int(_)) => {
            let ExprKind::Int(b) = c.bound.kind else { unreachable!() };
            plus_const(c.start.clone(), extra - b)
        }
        _ => plus_const(bin(BinOp::Sub, c.start.clone(), c.bound.clone()), extra),
    };
    if stride == 1 {
        distance
    } else {
        bin(BinOp::Div, distance, int(stride, loc))
    }
}

/// Decides, for every loop, whether it runs exactly or is extrapolated from
/// a trip-count expression. Results are indexed by [`LoopId`].
pub fn annotate_loops(program: &Program, map: &TrackednessMap) -> Result<Vec<LoopAnnotation>, Vec<Diagnostic>> {
    let mut out = vec![LoopAnnotation::Exact; program.loop_count];
    let mut diags = Vec::new();
    let not_analyzable = |loc: Loc| Diagnostic::error(loc, "loop not analyzable; add #perf iterations(...)");
    for f in &program.functions {
        f.walk(&mut |s| match &s.kind {
            StmtKind::For {
                header,
                init,
                cond,
                step,
                body,
            } => {
                if let Some(a) = &header.annotation {
                    out[header.id] = LoopAnnotation::Trip(a.clone());
                    return;
                }
                match canonical(init, cond, step, body) {
                    Some(c) => {
                        let tracked = map.is_tracked_int(program, c.bound)
                            || map.is_tracked_int(program, c.start);
                        if tracked {
                            out[header.id] = LoopAnnotation::Trip(trip_expr(&c));
                        }
                    }
                    None => {
                        if map.is_tracked_int(program, cond) {
                            diags.push(not_analyzable(s.loc));
                        }
                    }
                }
            }
            StmtKind::While { header, .. } => match &header.annotation {
                Some(a) => out[header.id] = LoopAnnotation::Trip(a.clone()),
                None => diags.push(not_analyzable(s.loc)),
            },
            _ => {}
        });
    }
    if diags.is_empty() {
        Ok(out)
    } else {
        Err(diags)
    }
}
