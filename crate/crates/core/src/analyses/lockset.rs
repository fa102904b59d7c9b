use std::collections::BTreeSet;


use super::dataflow::forward;
use super::handles::HandleInfo;
use crate::frontend::{Command, Expr, FuncId, LockId, Program, Target, VarId};

/// A real lock, or a synthetic lock standing for a protected region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NotionalLock {
    Real(LockId),
    /// Between `suspend(h)` and `resume(h)` for a handle that must run the function.
    SuspBlock(FuncId),
    /// Between `f := 1` and the next other write to `f`.
    FlagSet(VarId),
    /// Inside the branch guarded by `f == 0`.
    FlagChk(VarId),
    IntOff,
    SchedOff,
}

impl NotionalLock {
    pub fn describe(&self, p: &Program) -> String {
        match *self {
            NotionalLock::Real(l) => format!("Real({})", p.locks[l].name),
            NotionalLock::SuspBlock(f) => format!("SuspBlock({})", p.functions[f].name),
            NotionalLock::FlagSet(v) => format!("FlagSet({})", p.vars[v]),
            NotionalLock::FlagChk(v) => format!("FlagChk({})", p.vars[v]),
            NotionalLock::IntOff => "IntOff".into(),
            NotionalLock::SchedOff => "SchedOff".into(),
        }
    }
}

pub type LockSet = BTreeSet<NotionalLock>;

/// Per function, per location: locks held on every path, `None` if unreachable.
pub type LockFacts = Vec<Vec<Option<LockSet>>>;

/// Must-held locks, real and notional. Main starts with interrupts and the
/// scheduler off.
pub fn lockset_analysis(p: &Program, handles: &HandleInfo) -> LockFacts {
    p.functions
        .iter()
        .enumerate()
        .map(|(g, f)| {
            let init: LockSet = if g == p.main {
                [NotionalLock::IntOff, NotionalLock::SchedOff].into()
            } else {
                LockSet::new()
            };
            let index_of = |ins: &crate::frontend::Instruction| {
                f.cfg.instrs.iter().position(|i| std::ptr::eq(i, ins)).unwrap()
            };
            forward(
                &f.cfg,
                init,
                |ins, held| {
                    let mut h = held.clone();
                    match &ins.cmd {
                        Command::Lock(l) => {
                            h.insert(NotionalLock::Real(*l));
                        }
                        Command::Unlock(l) => {
                            h.remove(&NotionalLock::Real(*l));
                        }
                        Command::Suspend(Target::Handle(_)) => {
                            if let Some(b) = handles.get(g, index_of(ins)).and_then(|r| r.must_run) {
                                if b != g {
                                    h.insert(NotionalLock::SuspBlock(b));
                                }
                            }
                        }
                        Command::Resume(_) => {
                            if let Some(r) = handles.get(g, index_of(ins)) {
                                for b in &r.may_run {
                                    h.remove(&NotionalLock::SuspBlock(*b));
                                }
                            }
                        }
                        Command::Assign(x, e) => {
                            h.remove(&NotionalLock::FlagChk(*x));
                            if *e == Expr::Int(1) {
                                h.insert(NotionalLock::FlagSet(*x));
                            } else {
                                h.remove(&NotionalLock::FlagSet(*x));
                            }
                        }
                        Command::Assume(b) => {
                            if let Some(f) = b.flag_unset_check() {
                                h.insert(NotionalLock::FlagChk(f));
                            }
                        }
                        Command::DisableInt => {
                            h.insert(NotionalLock::IntOff);
                        }
                        Command::EnableInt => {
                            h.remove(&NotionalLock::IntOff);
                        }
                        Command::SuspendSched => {
                            h.insert(NotionalLock::SchedOff);
                        }
                        Command::ResumeSched => {
                            h.remove(&NotionalLock::SchedOff);
                        }
                        Command::Start => {
                            // `start` also readies every suspended task.
                            h.retain(|l| !matches!(l, NotionalLock::SuspBlock(_)));
                            h.remove(&NotionalLock::IntOff);
                            h.remove(&NotionalLock::SchedOff);
                        }
                        _ => {}
                    }
                    h
                },
                |a, b| a.intersection(b).copied().collect(),
            )
        })
        .collect()
}
