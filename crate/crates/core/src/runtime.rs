//! Profiling state for one run: symbolic counters, loop extrapolation, heap
//! tracking and the calling-context tree.
//!
//! Loops are extrapolated with a snapshot/delta protocol. [`Context::loop_enter`]
//! copies every counter, the body runs for at most `max_iterations`
//! iterations, and [`Context::loop_exit`] rescales each counter's growth by
//! `trip / executed`. The large-configuration live heap size is rescaled the
//! same way with integer arithmetic, after which the peak rule runs again.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::frontend::Loc;
use crate::term::{assignment, Assignment, BigO, Term};
use crate::values::{Num, ValueError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuntimeError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("loop trip count is negative ({0})")]
    NegativeTrip(i64),
    #[error("allocation of negative size ({small} bytes, large {large})")]
    NegativeAllocation { small: i64, large: i64 },
    #[error("memory misuse: {0}")]
    MemoryMisuse(String),
    #[error("live memory overflows 64 bits in the large configuration")]
    Overflow,
    #[error(transparent)]
    Value(#[from] ValueError),
}

pub type NodeId = usize;
pub type BlockId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CommKind {
    Allreduce,
    Send,
    Recv,
}

impl CommKind {
    pub const ALL: [CommKind; 3] = [CommKind::Allreduce, CommKind::Send, CommKind::Recv];

    pub fn name(self) -> &'static str {
        match self {
            CommKind::Allreduce => "allreduce",
            CommKind::Send => "send",
            CommKind::Recv => "recv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CounterKey {
    Flops,
    CommCalls(CommKind),
    CommBytes(CommKind),
    AllocBytesTotal,
    LiveBytes,
    NodeCalls(NodeId),
    NodeFlops(NodeId),
    NodeCommCalls(NodeId),
    NodeCommBytes(NodeId),
    NodeAllocBytes(NodeId),
}

/// Term-valued counters. Absent keys read as zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CounterStore {
    counters: BTreeMap<CounterKey, Term>,
}

impl CounterStore {
    pub fn get(&self, key: &CounterKey) -> Term {
        self.counters.get(key).cloned().unwrap_or_default()
    }

    pub fn add(&mut self, key: CounterKey, amount: &Term) {
        if amount.is_zero() {
            return;
        }
        let slot = self.counters.entry(key).or_default();
        *slot = &*slot + amount;
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CounterKey, &Term)> {
        self.counters.iter()
    }

    /// Replaces each counter by `snapshot + (current - snapshot) * trip / executed`.
    fn extrapolate(&mut self, snapshot: &CounterStore, trip: &Term, executed: u64) {
        for (key, current) in self.counters.iter_mut() {
            let before = snapshot.get(key);
            let delta = &*current - &before;
            if delta.is_zero() {
                continue;
            }
            *current = &before + &delta.scale(trip, executed);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputSpec {
    pub name: String,
    pub small: i64,
    pub large: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallNode {
    pub id: NodeId,
    pub name: String,
    pub parent: Option<NodeId>,
    pub children: BTreeMap<String, NodeId>,
}

#[derive(Debug, Clone)]
struct LoopScope {
    trip: Num,
    executed: u64,
    snapshot: CounterStore,
    live_large_snapshot: i64,
    loc: Option<Loc>,
}

/// Handle returned by [`Context::loop_enter`]; identifies the scope's depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoopToken(usize);

#[derive(Debug, Clone)]
struct Allocation {
    size: Num,
    live: bool,
}

#[derive(Debug, Clone, Default)]
struct MemState {
    allocations: Vec<Allocation>,
    live_large: i64,
    peak_term: Term,
    peak_large: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WarningKind {
    ComparisonAmbiguity,
    BranchDivergence,
    ZeroIterations,
    Truncation,
    LossyModulo,
}

impl WarningKind {
    pub fn name(self) -> &'static str {
        match self {
            WarningKind::ComparisonAmbiguity => "comparison-ambiguity",
            WarningKind::BranchDivergence => "branch-divergence",
            WarningKind::ZeroIterations => "zero-iterations",
            WarningKind::Truncation => "truncation",
            WarningKind::LossyModulo => "lossy-term",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub kind: WarningKind,
    pub loc: Option<Loc>,
    pub message: String,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.loc {
            Some(loc) => write!(f, "{loc}: {}: {}", self.kind.name(), self.message),
            None => write!(f, "{}: {}", self.kind.name(), self.message),
        }
    }
}

/// Profiling state of a single run. Confined to one thread while in use.
#[derive(Debug, Clone)]
pub struct Context {
    inputs: Vec<InputSpec>,
    small: Assignment,
    large: Assignment,
    max_iterations: u64,
    counters: CounterStore,
    nodes: Vec<CallNode>,
    current: NodeId,
    loops: Vec<LoopScope>,
    mem: MemState,
    warnings: Vec<Warning>,
    warned: HashSet<(WarningKind, Option<Loc>)>,
    /// FLOPs charged to the current node but not yet folded into the
    /// term counters; flushed whenever counters are observed.
    pending_flops: i64,
}

pub const ROOT: NodeId = 0;
pub const ROOT_NAME: &str = "<program>";

impl Context {
    pub fn new(inputs: &[(String, i64, i64)], max_iterations: u64) -> Result<Context, RuntimeError> {
        let mut seen = HashSet::new();
        let mut specs = Vec::with_capacity(inputs.len());
        for (name, small, large) in inputs {
            if !seen.insert(name.as_str()) {
                return Err(RuntimeError::Config(format!("duplicate input `{name}`")));
            }
            Num::input(name, *small, *large)?;
            specs.push(InputSpec {
                name: name.clone(),
                small: *small,
                large: *large,
            });
        }
        if max_iterations == 0 {
            return Err(RuntimeError::Config("max iterations must be at least 1".into()));
        }
        Ok(Context {
            small: assignment(specs.iter().map(|s| (s.name.as_str(), s.small))),
            large: assignment(specs.iter().map(|s| (s.name.as_str(), s.large))),
            inputs: specs,
            max_iterations,
            counters: CounterStore::default(),
            nodes: vec![CallNode {
                id: ROOT,
                name: ROOT_NAME.to_string(),
                parent: None,
                children: BTreeMap::new(),
            }],
            current: ROOT,
            loops: Vec::new(),
            mem: MemState::default(),
            warnings: Vec::new(),
            pending_flops: 0,
            warned: HashSet::new(),
        })
    }

    pub fn inputs(&self) -> &[InputSpec] {
        &self.inputs
    }

    pub fn small_assignment(&self) -> &Assignment {
        &self.small
    }

    pub fn large_assignment(&self) -> &Assignment {
        &self.large
    }

    pub fn counter(&self, key: &CounterKey) -> Term {
        let value = self.counters.get(key);
        let pending = self.pending_flops != 0
            && (*key == CounterKey::Flops || *key == CounterKey::NodeFlops(self.current));
        if pending {
            &value + &Term::int(self.pending_flops)
        } else {
            value
        }
    }

    fn flush(&mut self) {
        if self.pending_flops != 0 {
            let amount = Term::int(std::mem::take(&mut self.pending_flops));
            self.counters.add(CounterKey::Flops, &amount);
            self.counters.add(CounterKey::NodeFlops(self.current), &amount);
        }
    }

    pub fn current_node(&self) -> NodeId {
        self.current
    }

    pub fn node(&self, id: NodeId) -> &CallNode {
        &self.nodes[id]
    }

    pub fn loop_depth(&self) -> usize {
        self.loops.len()
    }

    pub fn live_large(&self) -> i64 {
        self.mem.live_large
    }

    pub fn peak(&self) -> (&Term, i64) {
        (&self.mem.peak_term, self.mem.peak_large)
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    /// Records a warning once per kind and location.
    pub fn warn(&mut self, kind: WarningKind, loc: Option<Loc>, message: impl Into<String>) {
        if self.warned.insert((kind, loc)) {
            self.warnings.push(Warning {
                kind,
                loc,
                message: message.into(),
            });
        }
    }

    pub fn enter_function(&mut self, name: &str) -> NodeId {
        self.flush();
        let parent = self.current;
        let child = match self.nodes[parent].children.get(name) {
            Some(&id) => id,
            None => {
                let id = self.nodes.len();
                self.nodes.push(CallNode {
                    id,
                    name: name.to_string(),
                    parent: Some(parent),
                    children: BTreeMap::new(),
                });
                self.nodes[parent].children.insert(name.to_string(), id);
                id
            }
        };
        self.counters.add(CounterKey::NodeCalls(child), &Term::one());
        self.current = child;
        child
    }

    pub fn exit_function(&mut self) -> Result<(), RuntimeError> {
        self.flush();
        match self.nodes[self.current].parent {
            Some(parent) => {
                self.current = parent;
                Ok(())
            }
            None => Err(RuntimeError::Invariant("function exit at the root node".into())),
        }
    }

    /// Adds `amount` to `key` and mirrors it into the current node's
    /// matching per-node counter.
    pub fn charge(&mut self, key: CounterKey, amount: &Term) {
        self.flush();
        let node = self.current;
        let mirror = match key {
            CounterKey::Flops => Some(CounterKey::NodeFlops(node)),
            CounterKey::CommCalls(_) => Some(CounterKey::NodeCommCalls(node)),
            CounterKey::CommBytes(_) => Some(CounterKey::NodeCommBytes(node)),
            CounterKey::AllocBytesTotal => Some(CounterKey::NodeAllocBytes(node)),
            _ => None,
        };
        self.counters.add(key, amount);
        if let Some(mirror) = mirror {
            self.counters.add(mirror, amount);
        }
    }

    pub fn charge_flops(&mut self, k: i64) {
        match self.pending_flops.checked_add(k) {
            Some(total) => self.pending_flops = total,
            None => {
                self.flush();
                self.pending_flops = k;
            }
        }
    }

    pub fn loop_enter(&mut self, trip: &Num, loc: Option<Loc>) -> Result<LoopToken, RuntimeError> {
        if trip.small < 0 {
            return Err(RuntimeError::NegativeTrip(trip.small));
        }
        self.flush();
        self.loops.push(LoopScope {
            trip: trip.clone(),
            executed: 0,
            snapshot: self.counters.clone(),
            live_large_snapshot: self.mem.live_large,
            loc,
        });
        Ok(LoopToken(self.loops.len() - 1))
    }

    fn top(&mut self, token: LoopToken) -> Result<&mut LoopScope, RuntimeError> {
        if token.0 + 1 != self.loops.len() {
            return Err(RuntimeError::Invariant(format!(
                "loop scope {} is not on top of the loop stack (depth {})",
                token.0,
                self.loops.len()
            )));
        }
        Ok(self.loops.last_mut().expect("nonempty loop stack"))
    }

    /// Starts another iteration if the cap and the small trip allow it.
    pub fn loop_iteration(&mut self, token: LoopToken) -> Result<bool, RuntimeError> {
        let cap = self.max_iterations;
        let scope = self.top(token)?;
        let limit = cap.min(scope.trip.small as u64);
        if scope.executed < limit {
            scope.executed += 1;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    pub fn loop_executed(&self, token: LoopToken) -> u64 {
        self.loops.get(token.0).map_or(0, |s| s.executed)
    }

    pub fn loop_exit(&mut self, token: LoopToken) -> Result<(), RuntimeError> {
        self.top(token)?;
        self.flush();
        let scope = self.loops.pop().expect("checked above");
        if scope.executed == 0 {
            self.counters = scope.snapshot;
            self.mem.live_large = scope.live_large_snapshot;
            self.warn(
                WarningKind::ZeroIterations,
                scope.loc,
                format!(
                    "loop ran zero iterations (trip {}); it contributes nothing",
                    scope.trip.term
                ),
            );
            return Ok(());
        }
        self.counters
            .extrapolate(&scope.snapshot, &scope.trip.term, scope.executed);
        let delta = self.mem.live_large as i128 - scope.live_large_snapshot as i128;
        let scaled = delta * scope.trip.large as i128 / scope.executed as i128;
        self.mem.live_large = i64::try_from(scope.live_large_snapshot as i128 + scaled)
            .map_err(|_| RuntimeError::Overflow)?;
        self.update_peak();
        Ok(())
    }

    fn update_peak(&mut self) {
        if self.mem.live_large > self.mem.peak_large {
            self.mem.peak_large = self.mem.live_large;
            self.mem.peak_term = self.counters.get(&CounterKey::LiveBytes);
        }
    }

    pub fn mem_alloc(&mut self, size: &Num) -> Result<BlockId, RuntimeError> {
        if size.small < 0 || size.large < 0 {
            return Err(RuntimeError::NegativeAllocation {
                small: size.small,
                large: size.large,
            });
        }
        self.mem.live_large = self
            .mem
            .live_large
            .checked_add(size.large)
            .ok_or(RuntimeError::Overflow)?;
        self.counters.add(CounterKey::LiveBytes, &size.term);
        self.charge(CounterKey::AllocBytesTotal, &size.term);
        let id = self.mem.allocations.len();
        self.mem.allocations.push(Allocation {
            size: size.clone(),
            live: true,
        });
        self.update_peak();
        Ok(id)
    }

    pub fn mem_free(&mut self, block: BlockId) -> Result<(), RuntimeError> {
        let alloc = self
            .mem
            .allocations
            .get_mut(block)
            .ok_or_else(|| RuntimeError::MemoryMisuse(format!("free of unknown block {block}")))?;
        if !alloc.live {
            return Err(RuntimeError::MemoryMisuse(format!("double free of block {block}")));
        }
        alloc.live = false;
        let size = alloc.size.clone();
        self.mem.live_large -= size.large;
        self.counters.add(CounterKey::LiveBytes, &-&size.term);
        Ok(())
    }

    pub fn is_live(&self, block: BlockId) -> bool {
        self.mem.allocations.get(block).is_some_and(|a| a.live)
    }

    pub fn comm_event(&mut self, kind: CommKind, bytes: &Num) -> Result<(), RuntimeError> {
        if bytes.small < 0 {
            return Err(RuntimeError::Config(format!(
                "{} of negative byte count {}",
                kind.name(),
                bytes.small
            )));
        }
        self.charge(CounterKey::CommCalls(kind), &Term::one());
        self.charge(CounterKey::CommBytes(kind), &bytes.term);
        Ok(())
    }

    pub fn finalize(mut self) -> Result<ProfileResult, RuntimeError> {
        self.flush();
        if !self.loops.is_empty() {
            return Err(RuntimeError::Invariant(format!(
                "{} loop scope(s) still open",
                self.loops.len()
            )));
        }
        if self.current != ROOT {
            return Err(RuntimeError::Invariant(format!(
                "unbalanced call tree: still inside `{}`",
                self.nodes[self.current].name
            )));
        }
        let counters = &self.counters;
        let nodes: Vec<NodeReport> = self
            .nodes
            .iter()
            .map(|n| NodeReport {
                id: n.id,
                name: n.name.clone(),
                parent: n.parent,
                children: {
                    let mut ids: Vec<NodeId> = n.children.values().copied().collect();
                    ids.sort_unstable();
                    ids
                },
                calls: counters.get(&CounterKey::NodeCalls(n.id)),
                flops: counters.get(&CounterKey::NodeFlops(n.id)),
                comm_calls: counters.get(&CounterKey::NodeCommCalls(n.id)),
                comm_bytes: counters.get(&CounterKey::NodeCommBytes(n.id)),
                alloc_bytes: counters.get(&CounterKey::NodeAllocBytes(n.id)),
            })
            .collect();
        let functions = summarize(&nodes);
        Ok(ProfileResult {
            inputs: self.inputs,
            nodes,
            functions,
            counters: self.counters,
            peak_term: self.mem.peak_term,
            peak_large: self.mem.peak_large,
            warnings: self.warnings,
            return_value: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeReport {
    pub id: NodeId,
    pub name: String,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub calls: Term,
    pub flops: Term,
    pub comm_calls: Term,
    pub comm_bytes: Term,
    pub alloc_bytes: Term,
}

/// Statistics of one function summed over every call path reaching it.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSummary {
    pub name: String,
    pub calls: Term,
    pub flops: Term,
    pub flops_big_o: BigO,
    pub alloc_bytes: Term,
    pub comm_calls: Term,
    pub comm_bytes: Term,
}

fn summarize(nodes: &[NodeReport]) -> Vec<FunctionSummary> {
    let mut order: Vec<String> = Vec::new();
    let mut acc: BTreeMap<String, FunctionSummary> = BTreeMap::new();
    for n in nodes.iter().filter(|n| n.parent.is_some()) {
        let entry = acc.entry(n.name.clone()).or_insert_with(|| {
            order.push(n.name.clone());
            FunctionSummary {
                name: n.name.clone(),
                calls: Term::zero(),
                flops: Term::zero(),
                flops_big_o: Term::zero().big_o(),
                alloc_bytes: Term::zero(),
                comm_calls: Term::zero(),
                comm_bytes: Term::zero(),
            }
        });
        entry.calls = &entry.calls + &n.calls;
        entry.flops = &entry.flops + &n.flops;
        entry.alloc_bytes = &entry.alloc_bytes + &n.alloc_bytes;
        entry.comm_calls = &entry.comm_calls + &n.comm_calls;
        entry.comm_bytes = &entry.comm_bytes + &n.comm_bytes;
    }
    order
        .into_iter()
        .map(|name| {
            let mut s = acc.remove(&name).expect("inserted above");
            s.flops_big_o = s.flops.big_o();
            s
        })
        .collect()
}

/// Value returned by `main`.
#[derive(Debug, Clone, PartialEq)]
pub enum ReturnValue {
    Int(i64),
    Num(Num),
    Float(f64),
}

impl fmt::Display for ReturnValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReturnValue::Int(v) => write!(f, "{v}"),
            ReturnValue::Num(n) => write!(f, "{n}"),
            ReturnValue::Float(v) => write!(f, "{v}"),
        }
    }
}

/// Frozen outcome of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileResult {
    pub inputs: Vec<InputSpec>,
    pub nodes: Vec<NodeReport>,
    pub functions: Vec<FunctionSummary>,
    pub counters: CounterStore,
    pub peak_term: Term,
    pub peak_large: i64,
    pub warnings: Vec<Warning>,
    pub return_value: Option<ReturnValue>,
}

impl ProfileResult {
    pub fn counter(&self, key: &CounterKey) -> Term {
        self.counters.get(key)
    }

    pub fn flops(&self) -> Term {
        self.counter(&CounterKey::Flops)
    }

    pub fn comm_calls(&self, kind: CommKind) -> Term {
        self.counter(&CounterKey::CommCalls(kind))
    }

    pub fn comm_bytes(&self, kind: CommKind) -> Term {
        self.counter(&CounterKey::CommBytes(kind))
    }

    pub fn total_comm_calls(&self) -> Term {
        CommKind::ALL
            .iter()
            .fold(Term::zero(), |acc, &k| &acc + &self.comm_calls(k))
    }

    pub fn total_comm_bytes(&self) -> Term {
        CommKind::ALL
            .iter()
            .fold(Term::zero(), |acc, &k| &acc + &self.comm_bytes(k))
    }

    pub fn alloc_bytes_total(&self) -> Term {
        self.counter(&CounterKey::AllocBytesTotal)
    }

    pub fn live_bytes(&self) -> Term {
        self.counter(&CounterKey::LiveBytes)
    }

    pub fn function(&self, name: &str) -> Option<&FunctionSummary> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn node_by_path(&self, path: &[&str]) -> Option<&NodeReport> {
        let mut cur = &self.nodes[ROOT];
        for name in path {
            cur = cur
                .children
                .iter()
                .map(|&c| &self.nodes[c])
                .find(|c| c.name == *name)?;
        }
        Some(cur)
    }

    pub fn warnings_of(&self, kind: WarningKind) -> impl Iterator<Item = &Warning> {
        self.warnings.iter().filter(move |w| w.kind == kind)
    }
}
