//! Source language: parsing, lowering to control-flow graphs, placement checks.
//!
//! A program is a set of global integer variables, a set of locks and an
//! ordered list of thread functions. Every function is lowered to a CFG whose
//! edges carry one of the fourteen basic commands; `if`, `while` and `for(;;)`
//! exist only in the surface syntax and become `assume` edges.

mod lexer;
mod lower;
mod parser;
mod pretty;
mod validate;

use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

pub use parser::parse;
pub use pretty::{pretty_print, shape_of, ProgramShape};
pub use validate::{validate, Diagnostic};

/// Default ceiling for task priorities when the source has no `maxprio` header.
pub const DEFAULT_MAX_PRIO: u32 = 7;

pub type VarId = usize;
pub type LockId = usize;
pub type FuncId = usize;
pub type Loc = usize;
pub type LoopId = usize;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum FrontendError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: u32, col: u32, msg: String },
    #[error("{line}: duplicate function `{name}`")]
    DuplicateFunction { name: String, line: u32 },
    #[error("{line}:{col}: unknown identifier `{name}`")]
    UnknownIdentifier { name: String, line: u32, col: u32 },
    #[error("{line}:{col}: `{name}` is used both as a lock and as a variable")]
    KindClash { name: String, line: u32, col: u32 },
    #[error("program has no `main` function")]
    MissingMain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FuncKind {
    Main,
    Task,
    Isr,
}

impl FuncKind {
    /// Main counts as a task thread for every scheduling predicate.
    pub fn is_task_like(self) -> bool {
        !matches!(self, FuncKind::Isr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LockKind {
    Plain,
    Mutex,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LockDecl {
    pub name: String,
    pub kind: LockKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
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
            BinOp::Mod => "%",
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

/// Integer/boolean expression over global variables. Booleans are 0/1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Var(VarId),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn negation(e: Expr) -> Expr {
        Expr::Unary(UnOp::Not, Box::new(e))
    }

    pub fn vars(&self, out: &mut Vec<VarId>) {
        match self {
            Expr::Int(_) | Expr::Bool(_) => {}
            Expr::Var(v) => {
                if !out.contains(v) {
                    out.push(*v)
                }
            }
            Expr::Unary(_, e) => e.vars(out),
            Expr::Binary(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }

    /// `Some(f)` when the expression is literally `f == 0` (or `0 == f`).
    pub fn flag_unset_check(&self) -> Option<VarId> {
        match self {
            Expr::Binary(BinOp::Eq, a, b) => match (a.as_ref(), b.as_ref()) {
                (Expr::Var(v), Expr::Int(0)) | (Expr::Int(0), Expr::Var(v)) => Some(*v),
                _ => None,
            },
            _ => None,
        }
    }
}

/// Target of `set_priority` / `suspend`: a handle variable or `NULL`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    Current,
    Handle(VarId),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Command {
    Skip,
    Assign(VarId, Expr),
    Assume(Expr),
    Create { func: FuncId, prio: u32, handle: VarId },
    SetPriority { target: Target, prio: u32 },
    Suspend(Target),
    Resume(VarId),
    SuspendSched,
    ResumeSched,
    DisableInt,
    EnableInt,
    Lock(LockId),
    Unlock(LockId),
    Block,
    Start,
}

impl Command {
    pub fn keyword(&self) -> &'static str {
        match self {
            Command::Skip => "skip",
            Command::Assign(..) => "assign",
            Command::Assume(_) => "assume",
            Command::Create { .. } => "create",
            Command::SetPriority { .. } => "set_priority",
            Command::Suspend(_) => "suspend",
            Command::Resume(_) => "resume",
            Command::SuspendSched => "suspendsched",
            Command::ResumeSched => "resumesched",
            Command::DisableInt => "disableint",
            Command::EnableInt => "enableint",
            Command::Lock(_) => "lock",
            Command::Unlock(_) => "unlock",
            Command::Block => "block",
            Command::Start => "start",
        }
    }

    /// Commands an interrupt handler may execute.
    pub fn allowed_in_isr(&self) -> bool {
        matches!(
            self,
            Command::Skip
                | Command::Assign(..)
                | Command::Assume(_)
                | Command::DisableInt
                | Command::EnableInt
                | Command::Lock(_)
                | Command::Unlock(_)
        )
    }

    pub fn is_access(&self) -> bool {
        matches!(self, Command::Assign(..) | Command::Assume(_))
    }

    /// Variables read and written by an access statement.
    pub fn accesses(&self) -> (Vec<VarId>, Option<VarId>) {
        let mut reads = Vec::new();
        match self {
            Command::Assign(x, e) => {
                e.vars(&mut reads);
                (reads, Some(*x))
            }
            Command::Assume(b) => {
                b.vars(&mut reads);
                (reads, None)
            }
            _ => (reads, None),
        }
    }
}

/// Statement identity: function plus source line, with `sub` separating
/// several instructions that share one line (e.g. both branches of an `if`).
#[derive(Clone)]
pub struct StmtId {
    pub func: FuncId,
    pub line: u32,
    pub sub: u32,
    pub func_name: Arc<str>,
}

impl StmtId {
    pub fn new(func: FuncId, func_name: Arc<str>, line: u32, sub: u32) -> Self {
        StmtId { func, line, sub, func_name }
    }

    fn key(&self) -> (FuncId, u32, u32) {
        (self.func, self.line, self.sub)
    }
}

impl PartialEq for StmtId {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}
impl Eq for StmtId {}
impl std::hash::Hash for StmtId {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.key().hash(state)
    }
}
impl PartialOrd for StmtId {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for StmtId {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

impl fmt::Display for StmtId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sub == 0 {
            write!(f, "{}:{}", self.func_name, self.line)
        } else {
            write!(f, "{}:{}.{}", self.func_name, self.line, self.sub)
        }
    }
}

impl fmt::Debug for StmtId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for StmtId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// One CFG edge `(from, cmd, to)`.
#[derive(Debug, Clone)]
pub struct Instruction {
    pub id: StmtId,
    pub from: Loc,
    pub cmd: Command,
    pub to: Loc,
    /// Set on the edge that starts a loop iteration; gated by the loop bound.
    pub loop_entry: Option<LoopId>,
    /// Marks the `skip` probes inserted around a statement by the oracle.
    pub probe: Option<Probe>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Probe {
    Pre,
    Post,
}

#[derive(Debug, Clone)]
pub struct Cfg {
    pub num_locs: usize,
    pub entry: Loc,
    pub exit: Loc,
    pub instrs: Vec<Instruction>,
    pub num_loops: usize,
    outgoing: Vec<Vec<usize>>,
}

impl Cfg {
    pub fn new(
        num_locs: usize,
        entry: Loc,
        exit: Loc,
        instrs: Vec<Instruction>,
        num_loops: usize,
    ) -> Self {
        let mut outgoing = vec![Vec::new(); num_locs];
        for (i, ins) in instrs.iter().enumerate() {
            outgoing[ins.from].push(i);
        }
        Cfg { num_locs, entry, exit, instrs, num_loops, outgoing }
    }

    /// Indices of instructions leaving `loc`.
    pub fn outgoing(&self, loc: Loc) -> &[usize] {
        &self.outgoing[loc]
    }

    /// Locations reachable from `from`, following only edges whose source
    /// satisfies `keep`.
    pub fn reachable_from(&self, from: Loc, keep: impl Fn(Loc) -> bool) -> Vec<bool> {
        let mut seen = vec![false; self.num_locs];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(l) = stack.pop() {
            if !keep(l) {
                continue;
            }
            for &i in self.outgoing(l) {
                let to = self.instrs[i].to;
                if !seen[to] {
                    seen[to] = true;
                    stack.push(to);
                }
            }
        }
        seen
    }

    /// True when `loc` lies on a CFG cycle.
    pub fn on_cycle(&self, loc: Loc) -> bool {
        self.outgoing(loc).iter().any(|&i| {
            let seen = self.reachable_from(self.instrs[i].to, |_| true);
            seen[loc]
        })
    }
}

/// Surface statement, kept for pretty-printing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Simple { cmd: Command, line: u32 },
    If { cond: Expr, then_body: Vec<Stmt>, else_body: Option<Vec<Stmt>>, line: u32 },
    While { cond: Expr, body: Vec<Stmt>, line: u32 },
    Forever { body: Vec<Stmt>, line: u32 },
}

#[derive(Debug, Clone)]
pub struct Function {
    pub name: Arc<str>,
    pub kind: FuncKind,
    pub body: Vec<Stmt>,
    pub cfg: Cfg,
    pub line: u32,
}

#[derive(Debug, Clone)]
pub struct Program {
    pub max_prio: u32,
    pub vars: Vec<String>,
    pub locks: Vec<LockDecl>,
    pub functions: Vec<Function>,
    pub main: FuncId,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<FuncId> {
        self.functions.iter().position(|f| &*f.name == name)
    }

    pub fn var(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn lock(&self, name: &str) -> Option<LockId> {
        self.locks.iter().position(|l| l.name == name)
    }

    /// ISR functions in declaration order; the j-th (1-based) runs at `m + j`.
    pub fn isrs(&self) -> Vec<FuncId> {
        (0..self.functions.len())
            .filter(|&f| self.functions[f].kind == FuncKind::Isr)
            .collect()
    }

    pub fn isr_priority(&self, f: FuncId) -> Option<u32> {
        self.isrs().iter().position(|&g| g == f).map(|j| self.max_prio + 1 + j as u32)
    }

    /// All instructions, in function declaration order then CFG order.
    pub fn statements(&self) -> Vec<(StmtId, Command)> {
        self.functions
            .iter()
            .flat_map(|f| f.cfg.instrs.iter().map(|i| (i.id.clone(), i.cmd.clone())))
            .collect()
    }

    pub fn instruction(&self, id: &StmtId) -> Option<&Instruction> {
        self.functions.get(id.func)?.cfg.instrs.iter().find(|i| i.id == *id && i.probe.is_none())
    }

    /// Resolve `func:line` or `func:line.sub`.
    pub fn resolve_stmt(&self, text: &str) -> Option<StmtId> {
        let (func, rest) = text.rsplit_once(':')?;
        let (line, sub): (u32, u32) = match rest.split_once('.') {
            Some((l, s)) => (l.parse().ok()?, s.parse().ok()?),
            None => (rest.parse().ok()?, 0),
        };
        let f = self.function(func)?;
        self.functions[f]
            .cfg
            .instrs
            .iter()
            .find(|i| i.id.line == line && i.id.sub == sub && i.probe.is_none())
            .map(|i| i.id.clone())
    }

    /// Upper bound on the priority any thread of each function can reach
    /// through `create`, `set_priority` and mutex priority adjustment.
    /// Task functions only; ISRs get their fixed priority.
    pub fn static_max_prio(&self) -> Vec<u32> {
        let n = self.functions.len();
        let mut hi = vec![0u32; n];
        let mut any_handle_setp = 0;
        for f in &self.functions {
            for ins in &f.cfg.instrs {
                if let Command::SetPriority { target: Target::Handle(_), prio } = ins.cmd {
                    any_handle_setp = any_handle_setp.max(prio);
                }
            }
        }
        for (fid, f) in self.functions.iter().enumerate() {
            if f.kind == FuncKind::Isr {
                hi[fid] = self.isr_priority(fid).unwrap_or(0);
                continue;
            }
            for ins in &f.cfg.instrs {
                match ins.cmd {
                    Command::Create { func, prio, .. } => hi[func] = hi[func].max(prio),
                    Command::SetPriority { target: Target::Current, prio } => {
                        hi[fid] = hi[fid].max(prio)
                    }
                    _ => {}
                }
            }
        }
        for (fid, f) in self.functions.iter().enumerate() {
            if f.kind == FuncKind::Task {
                hi[fid] = hi[fid].max(any_handle_setp);
            }
        }
        // Holding a mutex may lift a task to the mutex ceiling.
        loop {
            let ceil = self.ceilings_from(&hi);
            let mut changed = false;
            for (fid, f) in self.functions.iter().enumerate() {
                if !f.kind.is_task_like() {
                    continue;
                }
                for ins in &f.cfg.instrs {
                    if let Command::Lock(l) = ins.cmd {
                        if self.locks[l].kind == LockKind::Mutex && ceil[l] > hi[fid] {
                            hi[fid] = ceil[l];
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                return hi;
            }
        }
    }

    /// Ceiling of each lock: the highest priority any task-like acquirer can
    /// have. Zero for locks no task takes.
    pub fn ceilings(&self) -> Vec<u32> {
        self.ceilings_from(&self.static_max_prio())
    }

    fn ceilings_from(&self, hi: &[u32]) -> Vec<u32> {
        let mut ceil = vec![0u32; self.locks.len()];
        for (fid, f) in self.functions.iter().enumerate() {
            if !f.kind.is_task_like() {
                continue;
            }
            for ins in &f.cfg.instrs {
                if let Command::Lock(l) = ins.cmd {
                    ceil[l] = ceil[l].max(hi[fid]);
                }
            }
        }
        ceil
    }

    pub fn expr_to_string(&self, e: &Expr) -> String {
        pretty::expr_string(self, e)
    }

    pub fn command_to_string(&self, c: &Command) -> String {
        pretty::command_string(self, c)
    }
}
