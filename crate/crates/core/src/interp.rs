//! Tree-walking evaluator for analyzed PerfC programs.
//!
//! In profile mode, integers derived from inputs are [`Num`] triples,
//! comparisons between them follow the large configuration, and loops with
//! a trip-count annotation run through the runtime's extrapolation protocol.
//! Exact mode runs every loop to completion on the small values alone; its
//! counters are plain numbers and serve as the reference the symbolic
//! formulas are checked against.

use std::fmt;

use thiserror::Error;

use crate::frontend::{
    Analyzed, BinOp, Builtin, DeclId, Expr, ExprKind, Function, LValue, Loc, LoopAnnotation,
    LoopHeader, Marker, Scalar, Stmt, StmtKind, Type, UnOp,
};
use crate::runtime::{BlockId, CommKind, Context, ProfileResult, ReturnValue, RuntimeError, WarningKind};
use crate::values::{
    float_binop, float_compare, num_binop, num_compare, plain_binop, CmpOp, FloatOp, IntOp, Num,
    NumWarning, TrackedFloat, ValueError,
};

pub use crate::runtime::ProfileResult as Profile;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Profile,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub mode: Mode,
    /// Iteration cap for extrapolated loops; `u64::MAX` runs them fully.
    pub max_iterations: u64,
    pub inputs: Vec<(String, i64, i64)>,
    pub recursion_limit: usize,
    /// Upper bound on loop iterations actually executed in one run.
    pub step_limit: u64,
}

impl RunOptions {
    pub fn new(mode: Mode, inputs: &[(&str, i64, i64)]) -> RunOptions {
        RunOptions {
            mode,
            max_iterations: 2,
            inputs: inputs.iter().map(|&(n, s, l)| (n.to_string(), s, l)).collect(),
            recursion_limit: 10_000,
            step_limit: 50_000_000,
        }
    }

    pub fn profile(inputs: &[(&str, i64, i64)]) -> RunOptions {
        RunOptions::new(Mode::Profile, inputs)
    }

    /// Exact mode at the given sizes (small and large coincide).
    pub fn exact(inputs: &[(&str, i64)]) -> RunOptions {
        let triples: Vec<_> = inputs.iter().map(|&(n, v)| (n, v, v)).collect();
        RunOptions::new(Mode::Exact, &triples)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecErrorKind {
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error(transparent)]
    Value(#[from] ValueError),
    #[error("index {index} out of bounds for block of {len} element(s)")]
    OutOfBounds { index: i64, len: usize },
    #[error("use of freed memory")]
    UseAfterFree,
    #[error("use of uninitialized variable `{0}`")]
    Uninitialized(String),
    #[error("main parameter `{0}` has no --input binding")]
    UnboundInput(String),
    #[error("input `{0}` is not a parameter of main")]
    UnknownInput(String),
    #[error("recursion deeper than {0} calls")]
    RecursionLimit(usize),
    #[error("more than {0} loop iterations executed")]
    StepLimit(u64),
    #[error("type error: {0}")]
    Type(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ExecError {
    pub loc: Option<Loc>,
    pub kind: ExecErrorKind,
}

impl ExecError {
    /// Configuration problems (as opposed to faults during execution).
    pub fn is_configuration(&self) -> bool {
        matches!(
            self.kind,
            ExecErrorKind::UnboundInput(_)
                | ExecErrorKind::UnknownInput(_)
                | ExecErrorKind::Runtime(RuntimeError::Config(_))
                | ExecErrorKind::Runtime(RuntimeError::Value(
                    ValueError::InvalidInputConfiguration { .. } | ValueError::NegativeInput { .. }
                ))
                | ExecErrorKind::Value(ValueError::InvalidInputConfiguration { .. })
                | ExecErrorKind::Value(ValueError::NegativeInput { .. })
        )
    }
}

impl fmt::Display for ExecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.loc {
            Some(loc) => write!(f, "{loc}: {}", self.kind),
            None => write!(f, "{}", self.kind),
        }
    }
}

type ExecResult<T> = Result<T, ExecError>;

fn err<T>(loc: Loc, kind: impl Into<ExecErrorKind>) -> ExecResult<T> {
    Err(ExecError {
        loc: Some(loc),
        kind: kind.into(),
    })
}

fn at<E: Into<ExecErrorKind>>(loc: Loc) -> impl FnOnce(E) -> ExecError {
    move |e| ExecError {
        loc: Some(loc),
        kind: e.into(),
    }
}

fn type_error<T>(loc: Loc, msg: impl Into<String>) -> ExecResult<T> {
    err(loc, ExecErrorKind::Type(msg.into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockHandle {
    pub id: BlockId,
    pub elem: Scalar,
    pub count: Num,
}

/// Runtime values.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Num(Num),
    Float(TrackedFloat),
    Block(BlockHandle),
    Unit,
}

#[derive(Debug, Clone)]
enum Storage {
    Ints(Vec<Option<Value>>),
    Doubles(Vec<f64>),
}

impl Storage {
    fn len(&self) -> usize {
        match self {
            Storage::Ints(v) => v.len(),
            Storage::Doubles(v) => v.len(),
        }
    }
}

enum Flow {
    Normal,
    Return(Value),
}

type Frame = Vec<Option<Value>>;

struct Interp<'a> {
    analyzed: &'a Analyzed,
    opts: &'a RunOptions,
    ctx: Context,
    heap: Vec<Storage>,
    depth: usize,
    steps: u64,
}

const STACK_BYTES: usize = 512 << 20;

/// Executes `main` and returns the collected profile.
pub fn run(analyzed: &Analyzed, opts: &RunOptions) -> ExecResult<ProfileResult> {
    // deep PerfC recursion needs far more native stack than test threads get
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .name("perfscope-run".into())
            .stack_size(STACK_BYTES)
            .spawn_scoped(s, || run_on_current_thread(analyzed, opts))
            .expect("spawn interpreter thread")
            .join()
            .unwrap_or_else(|p| std::panic::resume_unwind(p))
    })
}

fn run_on_current_thread(analyzed: &Analyzed, opts: &RunOptions) -> ExecResult<ProfileResult> {
    let program = &analyzed.program;
    let main = program.main();
    let config = |kind: ExecErrorKind| ExecError { loc: None, kind };
    for (name, _, _) in &opts.inputs {
        if !main.params.iter().any(|&d| program.decl(d).name == *name) {
            return Err(config(ExecErrorKind::UnknownInput(name.clone())));
        }
    }
    let ctx = Context::new(&opts.inputs, opts.max_iterations).map_err(|e| config(e.into()))?;
    let mut args = Vec::new();
    for &d in &main.params {
        let name = &program.decl(d).name;
        let Some((_, small, large)) = opts.inputs.iter().find(|(n, _, _)| n == name) else {
            return Err(config(ExecErrorKind::UnboundInput(name.clone())));
        };
        let num = match opts.mode {
            Mode::Profile => Num::input(name, *small, *large).map_err(|e| config(e.into()))?,
            // exact runs need no symbolic bookkeeping at all
            Mode::Exact => {
                args.push(Value::Int(*small));
                continue;
            }
        };
        args.push(Value::Num(num));
    }
    let mut interp = Interp {
        analyzed,
        opts,
        ctx,
        heap: Vec::new(),
        depth: 0,
        steps: 0,
    };
    let ret = interp.call(main, args, main.loc)?;
    let mut result = interp.ctx.finalize().map_err(|e| config(e.into()))?;
    result.return_value = match ret {
        Value::Int(v) => Some(ReturnValue::Int(v)),
        Value::Num(n) => Some(ReturnValue::Num(n)),
        Value::Float(f) => Some(ReturnValue::Float(f.0)),
        Value::Block(_) | Value::Unit => None,
    };
    Ok(result)
}

impl<'a> Interp<'a> {
    fn marker(&self, decl: DeclId) -> Marker {
        self.analyzed.trackedness.marker(decl)
    }

    fn decl_type(&self, decl: DeclId) -> Type {
        self.analyzed.program.decl(decl).ty
    }

    fn profiling(&self) -> bool {
        self.opts.mode == Mode::Profile
    }

    fn record(&mut self, warning: Option<NumWarning>, loc: Loc) {
        match warning {
            Some(NumWarning::Truncation) => self.ctx.warn(
                WarningKind::Truncation,
                Some(loc),
                "integer division truncates; the symbolic term keeps the exact quotient",
            ),
            Some(NumWarning::LossyModulo) => self.ctx.warn(
                WarningKind::LossyModulo,
                Some(loc),
                "`%` has no symbolic form; the term is the small-configuration constant",
            ),
            None => {}
        }
    }

    /// Converts `v` to the representation a location of type `ty` holds.
    fn coerce(&self, ty: Type, marker: Marker, v: Value, loc: Loc) -> ExecResult<Value> {
        match ty {
            Type::Scalar(Scalar::Int) => {
                let tracked = marker == Marker::TrackedInt && self.profiling();
                Ok(match v {
                    Value::Int(c) if tracked => Value::Num(Num::literal(c)),
                    Value::Int(c) => Value::Int(c),
                    Value::Num(n) if tracked => Value::Num(n),
                    Value::Num(n) => Value::Int(n.small),
                    Value::Float(f) if tracked => Value::Num(Num::literal(f.0 as i64)),
                    Value::Float(f) => Value::Int(f.0 as i64),
                    Value::Block(_) | Value::Unit => return type_error(loc, "expected an integer value"),
                })
            }
            Type::Scalar(Scalar::Double) => Ok(Value::Float(TrackedFloat(self.to_f64(&v, loc)?))),
            Type::Ptr(elem) => match v {
                Value::Block(b) if b.elem == elem => Ok(Value::Block(b)),
                Value::Block(_) => type_error(loc, "pointer element types differ"),
                _ => type_error(loc, "expected a pointer value"),
            },
            Type::Void => Ok(Value::Unit),
        }
    }

    fn to_f64(&self, v: &Value, loc: Loc) -> ExecResult<f64> {
        match v {
            Value::Int(c) => Ok(*c as f64),
            Value::Num(n) => Ok(n.small as f64),
            Value::Float(f) => Ok(f.0),
            _ => type_error(loc, "expected a numeric value"),
        }
    }

    fn to_num(&self, v: Value, loc: Loc) -> ExecResult<Num> {
        match v {
            Value::Int(c) => Ok(Num::literal(c)),
            Value::Num(n) => Ok(n),
            _ => type_error(loc, "expected an integer value"),
        }
    }

    /// Concrete integer used for indexing and counts.
    fn to_index(&self, v: &Value, loc: Loc) -> ExecResult<i64> {
        match v {
            Value::Int(c) => Ok(*c),
            Value::Num(n) => Ok(n.small),
            _ => type_error(loc, "index must be an integer"),
        }
    }

    fn call(&mut self, f: &'a Function, args: Vec<Value>, loc: Loc) -> ExecResult<Value> {
        if self.depth >= self.opts.recursion_limit {
            return err(loc, ExecErrorKind::RecursionLimit(self.opts.recursion_limit));
        }
        self.depth += 1;
        self.ctx.enter_function(&f.name);
        let mut frame: Frame = vec![None; self.analyzed.program.decls.len()];
        for (&param, arg) in f.params.iter().zip(args) {
            let v = self.coerce(self.decl_type(param), self.marker(param), arg, loc)?;
            frame[param] = Some(v);
        }
        let flow = self.exec_block(&f.body, &mut frame)?;
        let ret = match flow {
            Flow::Return(v) if f.ret != Type::Void => {
                let marker = self.analyzed.trackedness.returns(&f.name);
                self.coerce(f.ret, marker, v, loc)?
            }
            _ => Value::Unit,
        };
        self.ctx.exit_function().map_err(at(loc))?;
        self.depth -= 1;
        Ok(ret)
    }

    fn exec_block(&mut self, stmts: &'a [Stmt], frame: &mut Frame) -> ExecResult<Flow> {
        for s in stmts {
            if let Flow::Return(v) = self.exec(s, frame)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn step(&mut self, loc: Loc) -> ExecResult<()> {
        self.steps += 1;
        if self.steps > self.opts.step_limit {
            return err(loc, ExecErrorKind::StepLimit(self.opts.step_limit));
        }
        Ok(())
    }

    fn exec(&mut self, s: &'a Stmt, frame: &mut Frame) -> ExecResult<Flow> {
        match &s.kind {
            StmtKind::Decl { decl, init } => {
                frame[*decl] = match init {
                    Some(e) => {
                        let v = self.eval(e, frame)?;
                        Some(self.coerce(self.decl_type(*decl), self.marker(*decl), v, e.loc)?)
                    }
                    None => None,
                };
            }
            StmtKind::Assign { target, op, value } => {
                let rhs = self.eval(value, frame)?;
                self.assign(target, op.binop(), rhs, frame, s.loc)?;
            }
            StmtKind::IncDec { target, delta } => {
                self.assign(target, Some(BinOp::Add), Value::Int(*delta), frame, s.loc)?;
            }
            StmtKind::If { cond, then, els } => {
                let c = self.eval(cond, frame)?;
                if self.truthy(&c, cond.loc)? {
                    return self.exec(then, frame);
                } else if let Some(e) = els {
                    return self.exec(e, frame);
                }
            }
            StmtKind::For {
                header,
                init,
                cond,
                step,
                body,
            } => {
                self.exec(init, frame)?;
                if let Some(trip) = self.extrapolated(header) {
                    return self.extrapolated_loop(s, trip, None, step, body, frame);
                }
                loop {
                    let c = self.eval(cond, frame)?;
                    if !self.truthy(&c, cond.loc)? {
                        break;
                    }
                    self.step(s.loc)?;
                    if let Flow::Return(v) = self.exec(body, frame)? {
                        return Ok(Flow::Return(v));
                    }
                    self.exec(step, frame)?;
                }
            }
            StmtKind::While { header, cond, body } => {
                if let Some(trip) = self.extrapolated(header) {
                    return self.extrapolated_loop(s, trip, Some(cond), s, body, frame);
                }
                loop {
                    let c = self.eval(cond, frame)?;
                    if !self.truthy(&c, cond.loc)? {
                        break;
                    }
                    self.step(s.loc)?;
                    if let Flow::Return(v) = self.exec(body, frame)? {
                        return Ok(Flow::Return(v));
                    }
                }
            }
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.eval(e, frame)?,
                    None => Value::Unit,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::Block(stmts) => return self.exec_block(stmts, frame),
            StmtKind::Expr(e) => {
                self.eval(e, frame)?;
            }
        }
        Ok(Flow::Normal)
    }

    fn extrapolated(&self, header: &'a LoopHeader) -> Option<&'a Expr> {
        if !self.profiling() {
            return None;
        }
        match self.analyzed.loops.get(header.id) {
            Some(LoopAnnotation::Trip(e)) => Some(e),
            _ => None,
        }
    }

    /// Runs at most the iteration cap, then scales the body's cost by the
    /// trip count. For-loop conditions are implied by the trip; while-loop
    /// conditions are still checked before each iteration.
    fn extrapolated_loop(
        &mut self,
        s: &'a Stmt,
        trip: &'a Expr,
        cond: Option<&'a Expr>,
        step: &'a Stmt,
        body: &'a Stmt,
        frame: &mut Frame,
    ) -> ExecResult<Flow> {
        let trip_value = self.eval(trip, frame)?;
        let trip_num = self.to_num(trip_value, trip.loc)?;
        let token = self.ctx.loop_enter(&trip_num, Some(s.loc)).map_err(at(s.loc))?;
        loop {
            if let Some(c) = cond {
                let v = self.eval(c, frame)?;
                if !self.truthy(&v, c.loc)? {
                    break;
                }
            }
            if !self.ctx.loop_iteration(token).map_err(at(s.loc))? {
                break;
            }
            self.step(s.loc)?;
            if let Flow::Return(v) = self.exec(body, frame)? {
                self.ctx.loop_exit(token).map_err(at(s.loc))?;
                return Ok(Flow::Return(v));
            }
            if !std::ptr::eq(step, s) {
                self.exec(step, frame)?;
            }
        }
        self.ctx.loop_exit(token).map_err(at(s.loc))?;
        Ok(Flow::Normal)
    }

    fn assign(&mut self, target: &'a LValue, op: Option<BinOp>, rhs: Value, frame: &mut Frame, loc: Loc) -> ExecResult<()> {
        match target {
            LValue::Var { name, decl } => {
                let value = match op {
                    None => rhs,
                    Some(op) => {
                        let Some(cur) = frame[*decl].clone() else {
                            return err(loc, ExecErrorKind::Uninitialized(name.clone()));
                        };
                        self.arith(op, cur, rhs, loc)?
                    }
                };
                frame[*decl] = Some(self.coerce(self.decl_type(*decl), self.marker(*decl), value, loc)?);
            }
            LValue::Index { name, decl, index } => {
                let (block, pos) = self.locate(name, *decl, index, frame)?;
                let value = match op {
                    None => rhs,
                    Some(op) => {
                        let cur = self.load(block, pos);
                        self.arith(op, cur, rhs, loc)?
                    }
                };
                let stored = match &mut self.heap[block] {
                    Storage::Doubles(_) => Value::Float(TrackedFloat(self.to_f64(&value, loc)?)),
                    Storage::Ints(_) => match value {
                        Value::Float(f) => Value::Int(f.0 as i64),
                        v @ (Value::Int(_) | Value::Num(_)) => v,
                        _ => return type_error(loc, "expected an integer value"),
                    },
                };
                match (&mut self.heap[block], stored) {
                    (Storage::Doubles(d), Value::Float(f)) => d[pos] = f.0,
                    (Storage::Ints(v), x) => v[pos] = Some(x),
                    _ => unreachable!("stored value matches storage kind"),
                }
            }
        }
        Ok(())
    }

    fn load(&self, block: BlockId, pos: usize) -> Value {
        match &self.heap[block] {
            Storage::Doubles(d) => Value::Float(TrackedFloat(d[pos])),
            Storage::Ints(v) => v[pos].clone().unwrap_or(Value::Int(0)),
        }
    }

    /// Resolves `name[index]` to a heap block and element position.
    fn locate(&mut self, name: &str, decl: DeclId, index: &'a Expr, frame: &mut Frame) -> ExecResult<(BlockId, usize)> {
        let loc = index.loc;
        let Some(base) = frame[decl].clone() else {
            return err(loc, ExecErrorKind::Uninitialized(name.to_string()));
        };
        let Value::Block(handle) = base else {
            return type_error(loc, format!("`{name}` does not hold a block"));
        };
        let iv = self.eval(index, frame)?;
        let i = self.to_index(&iv, loc)?;
        if !self.ctx.is_live(handle.id) {
            return err(loc, ExecErrorKind::UseAfterFree);
        }
        let len = self.heap[handle.id].len();
        let pos = if self.profiling() {
            // large-rule branches may index past the small-sized block
            if len == 0 {
                return err(loc, ExecErrorKind::OutOfBounds { index: i, len });
            }
            i.rem_euclid(len as i64) as usize
        } else {
            if i < 0 || i as usize >= len {
                return err(loc, ExecErrorKind::OutOfBounds { index: i, len });
            }
            i as usize
        };
        Ok((handle.id, pos))
    }

    fn truthy(&mut self, v: &Value, loc: Loc) -> ExecResult<bool> {
        match v {
            Value::Int(c) => Ok(*c != 0),
            Value::Float(f) => Ok(f.0 != 0.0),
            Value::Num(n) => Ok(self.compare_nums(CmpOp::Ne, n, &Num::literal(0), loc)),
            Value::Block(_) => Ok(true),
            Value::Unit => type_error(loc, "void value used as a condition"),
        }
    }

    fn compare_nums(&mut self, op: CmpOp, a: &Num, b: &Num, loc: Loc) -> bool {
        if !self.profiling() {
            return op.apply(a.small, b.small);
        }
        let c = num_compare(op, a, b);
        if c.diverges() {
            let (kind, what) = if c.ambiguous {
                (WarningKind::ComparisonAmbiguity, "large values tie")
            } else {
                (WarningKind::BranchDivergence, "configurations disagree")
            };
            self.ctx.warn(
                kind,
                Some(loc),
                format!(
                    "{what}: {} {} {} is {} for the large configuration but {} for the small one",
                    a.term,
                    cmp_symbol(op),
                    b.term,
                    c.result,
                    c.small_result
                ),
            );
        }
        c.result
    }

    fn compare(&mut self, op: CmpOp, l: Value, r: Value, loc: Loc) -> ExecResult<bool> {
        Ok(match (l, r) {
            (Value::Int(a), Value::Int(b)) => op.apply(a, b),
            (a @ Value::Float(_), b) | (a, b @ Value::Float(_)) => {
                let x = self.to_f64(&a, loc)?;
                let y = self.to_f64(&b, loc)?;
                float_compare(op, TrackedFloat(x), TrackedFloat(y))
            }
            (a @ (Value::Int(_) | Value::Num(_)), b @ (Value::Int(_) | Value::Num(_))) => {
                let a = self.to_num(a, loc)?;
                let b = self.to_num(b, loc)?;
                self.compare_nums(op, &a, &b, loc)
            }
            _ => return type_error(loc, "comparison of non-numeric values"),
        })
    }

    fn arith(&mut self, op: BinOp, l: Value, r: Value, loc: Loc) -> ExecResult<Value> {
        let int_op = match op {
            BinOp::Add => IntOp::Add,
            BinOp::Sub => IntOp::Sub,
            BinOp::Mul => IntOp::Mul,
            BinOp::Div => IntOp::Div,
            BinOp::Mod => IntOp::Mod,
            _ => unreachable!("arith called with {op:?}"),
        };
        match (l, r) {
            (Value::Int(a), Value::Int(b)) => Ok(Value::Int(plain_binop(int_op, a, b).map_err(at(loc))?)),
            (a @ Value::Float(_), b) | (a, b @ Value::Float(_)) => {
                let fop = match int_op {
                    IntOp::Add => FloatOp::Add,
                    IntOp::Sub => FloatOp::Sub,
                    IntOp::Mul => FloatOp::Mul,
                    IntOp::Div => FloatOp::Div,
                    IntOp::Mod => return type_error(loc, "`%` requires integer operands"),
                };
                let x = TrackedFloat(self.to_f64(&a, loc)?);
                let y = TrackedFloat(self.to_f64(&b, loc)?);
                Ok(Value::Float(float_binop(fop, x, y, &mut self.ctx)))
            }
            (a @ (Value::Int(_) | Value::Num(_)), b @ (Value::Int(_) | Value::Num(_))) => {
                let a = self.to_num(a, loc)?;
                let b = self.to_num(b, loc)?;
                let (n, w) = num_binop(int_op, &a, &b).map_err(at(loc))?;
                self.record(w, loc);
                Ok(Value::Num(n))
            }
            _ => type_error(loc, "arithmetic on non-numeric values"),
        }
    }

    fn eval(&mut self, e: &'a Expr, frame: &mut Frame) -> ExecResult<Value> {
        let loc = e.loc;
        match &e.kind {
            ExprKind::Int(v) => Ok(Value::Int(*v)),
            ExprKind::Float(v) => Ok(Value::Float(TrackedFloat(*v))),
            ExprKind::Var { name, decl } => frame[*decl]
                .clone()
                .ok_or_else(|| ExecError {
                    loc: Some(loc),
                    kind: ExecErrorKind::Uninitialized(name.clone()),
                }),
            ExprKind::Binary { op, lhs, rhs } => match op {
                BinOp::And | BinOp::Or => {
                    let l = self.eval(lhs, frame)?;
                    let lt = self.truthy(&l, lhs.loc)?;
                    if (*op == BinOp::And) != lt {
                        return Ok(Value::Int(lt as i64));
                    }
                    let r = self.eval(rhs, frame)?;
                    Ok(Value::Int(self.truthy(&r, rhs.loc)? as i64))
                }
                BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => {
                    let l = self.eval(lhs, frame)?;
                    let r = self.eval(rhs, frame)?;
                    let cmp = match op {
                        BinOp::Lt => CmpOp::Lt,
                        BinOp::Le => CmpOp::Le,
                        BinOp::Gt => CmpOp::Gt,
                        BinOp::Ge => CmpOp::Ge,
                        BinOp::Eq => CmpOp::Eq,
                        _ => CmpOp::Ne,
                    };
                    Ok(Value::Int(self.compare(cmp, l, r, loc)? as i64))
                }
                _ => {
                    let l = self.eval(lhs, frame)?;
                    let r = self.eval(rhs, frame)?;
                    self.arith(*op, l, r, loc)
                }
            },
            ExprKind::Unary { op, operand } => {
                let v = self.eval(operand, frame)?;
                match op {
                    UnOp::Not => Ok(Value::Int(!self.truthy(&v, loc)? as i64)),
                    UnOp::Neg => match v {
                        Value::Float(f) => Ok(Value::Float(TrackedFloat(-f.0))),
                        other => self.arith(BinOp::Sub, Value::Int(0), other, loc),
                    },
                }
            }
            ExprKind::Index { name, decl, index } => {
                let (block, pos) = self.locate(name, *decl, index, frame)?;
                Ok(self.load(block, pos))
            }
            ExprKind::Call { name, args } => {
                let f = self
                    .analyzed
                    .program
                    .function(name)
                    .expect("calls are resolved by the parser");
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.eval(a, frame)?);
                }
                self.call(f, values, loc)
            }
            ExprKind::Builtin { kind, args } => self.builtin(*kind, args, frame, loc),
            ExprKind::Malloc { size, elem, .. } => {
                let bytes_value = self.eval(size, frame)?;
                let bytes = self.to_num(bytes_value, size.loc)?;
                let (count, _) =
                    num_binop(IntOp::Div, &bytes, &Num::literal(elem.size())).map_err(at(loc))?;
                let id = self.ctx.mem_alloc(&bytes).map_err(at(loc))?;
                let len = count.small.max(0) as usize;
                self.heap.push(match elem {
                    Scalar::Int => Storage::Ints(vec![None; len]),
                    Scalar::Double => Storage::Doubles(vec![0.0; len]),
                });
                debug_assert_eq!(self.heap.len(), id + 1);
                Ok(Value::Block(BlockHandle {
                    id,
                    elem: *elem,
                    count,
                }))
            }
            ExprKind::SizeofType(t) => Ok(Value::Int(t.size())),
            ExprKind::SizeofDeref { decl, .. } => match self.decl_type(*decl) {
                Type::Ptr(s) => Ok(Value::Int(s.size())),
                t => Ok(Value::Int(t.size())),
            },
            ExprKind::SizeofVar { decl, .. } => Ok(Value::Int(self.decl_type(*decl).size())),
            ExprKind::AddrOf { .. } => type_error(loc, "address-of outside a builtin call"),
            ExprKind::Mpi(_) => Ok(Value::Int(0)),
        }
    }

    fn builtin(&mut self, kind: Builtin, args: &'a [Expr], frame: &mut Frame, loc: Loc) -> ExecResult<Value> {
        if kind == Builtin::Free {
            return match self.eval(&args[0], frame)? {
                Value::Block(b) => {
                    self.ctx.mem_free(b.id).map_err(at(loc))?;
                    Ok(Value::Unit)
                }
                _ => type_error(loc, "free expects a pointer"),
            };
        }
        // (buf, [recvbuf,] count, datatype, ...)
        let count_at = if kind == Builtin::Allreduce { 2 } else { 1 };
        let count_value = self.eval(&args[count_at], frame)?;
        let count = self.to_num(count_value, args[count_at].loc)?;
        let size = match &args[count_at + 1].kind {
            ExprKind::Mpi(c) => c.datatype_size(),
            _ => None,
        };
        let Some(size) = size else {
            return type_error(args[count_at + 1].loc, "expected MPI_DOUBLE or MPI_INT");
        };
        for (i, a) in args.iter().enumerate() {
            if i != count_at && !matches!(a.kind, ExprKind::AddrOf { .. }) {
                self.eval(a, frame)?;
            }
        }
        let (bytes, _) = num_binop(IntOp::Mul, &count, &Num::literal(size)).map_err(at(loc))?;
        let comm = match kind {
            Builtin::Allreduce => CommKind::Allreduce,
            Builtin::Send => CommKind::Send,
            _ => CommKind::Recv,
        };
        self.ctx.comm_event(comm, &bytes).map_err(at(loc))?;
        match kind {
            // a single rank: the reduction of one contribution is itself
            Builtin::Allreduce => {
                if let (ExprKind::AddrOf { decl: src, name }, ExprKind::AddrOf { decl: dst, .. }) =
                    (&args[0].kind, &args[1].kind)
                {
                    let Some(v) = frame[*src].clone() else {
                        return err(args[0].loc, ExecErrorKind::Uninitialized(name.clone()));
                    };
                    frame[*dst] = Some(self.coerce(self.decl_type(*dst), self.marker(*dst), v, loc)?);
                }
            }
            Builtin::Recv => {
                if let ExprKind::AddrOf { decl, .. } = &args[0].kind {
                    if frame[*decl].is_none() {
                        let zero = self.coerce(self.decl_type(*decl), self.marker(*decl), Value::Int(0), loc)?;
                        frame[*decl] = Some(zero);
                    }
                }
            }
            _ => {}
        }
        Ok(Value::Unit)
    }
}

fn cmp_symbol(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Lt => "<",
        CmpOp::Le => "<=",
        CmpOp::Gt => ">",
        CmpOp::Ge => ">=",
        CmpOp::Eq => "==",
        CmpOp::Ne => "!=",
    }
}
