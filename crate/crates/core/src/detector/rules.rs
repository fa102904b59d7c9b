use std::fmt;

use serde::Serialize;

use crate::analyses::{AnalysisFacts, Interval, Multiplicity, NotionalLock};
use crate::config::{DetectorConfig, MutexMode};
use crate::frontend::{Command, Expr, FuncId, FuncKind, LockKind, Loc, Program, StmtId, Target, VarId};

/// The six cannot-occur-in-between conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Rule {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Evaluation order, cheapest first.
pub const RULE_ORDER: [Rule; 6] = [Rule::C5, Rule::C6, Rule::C4, Rule::C1, Rule::C2, Rule::C3];

/// Rule evaluation context: one program, its facts and a configuration.
pub struct Rules<'a> {
    p: &'a Program,
    f: &'a AnalysisFacts,
    cfg: DetectorConfig,
    demoters: Vec<FuncId>,
}

impl<'a> Rules<'a> {
    pub fn new(p: &'a Program, f: &'a AnalysisFacts, cfg: DetectorConfig) -> Self {
        let demoters = demoters(p, f, cfg);
        Rules { p, f, cfg, demoters }
    }

    /// First rule (in [`RULE_ORDER`]) showing `s2` cannot occur in between `s1`.
    pub fn check(&self, s1: &StmtId, s2: &StmtId) -> Option<Rule> {
        RULE_ORDER.into_iter().find(|r| self.holds(*r, s1, s2))
    }

    /// Every rule that holds, in [`RULE_ORDER`].
    pub fn check_all(&self, s1: &StmtId, s2: &StmtId) -> Vec<Rule> {
        RULE_ORDER.into_iter().filter(|r| self.holds(*r, s1, s2)).collect()
    }

    pub fn holds(&self, r: Rule, s1: &StmtId, s2: &StmtId) -> bool {
        match r {
            Rule::C1 => self.c1(s1, s2),
            Rule::C2 => self.c2(s1, s2),
            Rule::C3 => self.c3(s1, s2),
            Rule::C4 => self.c4(s1, s2),
            Rule::C5 => self.c5(s1, s2),
            Rule::C6 => self.c6(s1, s2),
        }
    }

    fn locks(&self, s: &StmtId) -> &crate::analyses::LockSet {
        self.f.locks_at(self.p, s)
    }

    fn kind(&self, g: FuncId) -> FuncKind {
        self.p.functions[g].kind
    }

    fn single(&self, g: FuncId) -> bool {
        self.f.multiplicity[g] == Multiplicity::One
    }

    fn hi(&self, g: FuncId) -> Option<u32> {
        self.f.func_hi[g]
    }

    /// Functions other than a single-instance `a` itself.
    fn others<'s>(&'s self, set: impl IntoIterator<Item = &'s FuncId> + 's, a: FuncId) -> impl Iterator<Item = FuncId> + 's {
        set.into_iter().copied().filter(move |&g| !(g == a && self.single(g)))
    }

    /// Can a thread of `g` get the CPU away from a ready thread at priority
    /// `p`? With round robin an equal priority suffices.
    fn can_take_over(&self, g: FuncId, p: u32, a: FuncId) -> bool {
        let Some(h) = self.hi(g) else { return false };
        if h > p {
            return true;
        }
        if h < p {
            return false;
        }
        // Equal priority: time slicing, or a tie when a higher thread yields.
        self.cfg.round_robin || self.higher_exists(p, a)
    }

    /// Some running thread other than a single-instance `a` may exceed `p`.
    fn higher_exists(&self, p: u32, a: FuncId) -> bool {
        (0..self.p.functions.len()).any(|g| {
            self.kind(g).is_task_like()
                && self.f.multiplicity[g] != Multiplicity::Zero
                && !(g == a && self.single(g))
                && self.hi(g).is_some_and(|h| h > p)
        })
    }

    /// A thread that may drop its own priority without yielding, while at or
    /// above `p`, lets lower threads run past a ready one.
    fn demoter_threat(&self, p: u32, exclude: &[FuncId]) -> bool {
        self.demoters
            .iter()
            .any(|&d| !(exclude.contains(&d) && self.single(d)) && self.hi(d).is_some_and(|h| h >= p))
    }

    fn hull_where(&self, g: FuncId, lock: NotionalLock) -> Option<Interval> {
        let locs = &self.f.locks[g];
        locs.iter()
            .enumerate()
            .filter(|(_, l)| l.as_ref().is_some_and(|l| l.contains(&lock)))
            .filter_map(|(loc, _)| self.f.prio[g][loc])
            .reduce(Interval::hull)
    }

    /// A yielding instruction of `g` inside the `lock` region that can reach
    /// `target` without leaving the region.
    fn yields_before(&self, g: FuncId, lock: NotionalLock, target: Loc) -> bool {
        let cfg = &self.p.functions[g].cfg;
        let inside = |l: Loc| self.f.locks[g][l].as_ref().is_some_and(|s| s.contains(&lock));
        cfg.instrs.iter().enumerate().any(|(k, ins)| {
            inside(ins.from) && self.yields(g, k) && cfg.reachable_from(ins.to, inside)[target]
        })
    }

    fn yields(&self, g: FuncId, k: usize) -> bool {
        match self.p.functions[g].cfg.instrs[k].cmd {
            Command::Block | Command::Lock(_) | Command::Start | Command::Suspend(Target::Current) => true,
            Command::Suspend(Target::Handle(_)) => {
                self.f.handles.get(g, k).is_some_and(|r| r.may_run.contains(&g))
            }
            _ => false,
        }
    }

    fn loc(&self, s: &StmtId) -> Loc {
        self.p.instruction(s).unwrap().from
    }

    /// Interrupts are off at `s1`, or `s2` runs in main before any other
    /// thread can.
    fn c5(&self, s1: &StmtId, s2: &StmtId) -> bool {
        self.locks(s1).contains(&NotionalLock::IntOff)
            || (s1.func != self.p.main && self.f.is_pre_start(self.p, s2))
    }

    fn c6(&self, s1: &StmtId, s2: &StmtId) -> bool {
        self.locks(s1).contains(&NotionalLock::SchedOff)
            && self.kind(s1.func).is_task_like()
            && self.kind(s2.func).is_task_like()
    }

    fn c4(&self, s1: &StmtId, s2: &StmtId) -> bool {
        let l2 = self.locks(s2);
        self.locks(s1).iter().any(|l| matches!(l, NotionalLock::Real(_)) && l2.contains(l))
    }

    fn c1(&self, s1: &StmtId, s2: &StmtId) -> bool {
        let (a, b) = (s1.func, s2.func);
        let lock = NotionalLock::SuspBlock(b);
        if !self.locks(s1).contains(&lock) {
            return false;
        }
        let resumers: Vec<FuncId> = self.others(&self.f.lists.reslist[b], a).collect();
        if resumers.is_empty() {
            return true;
        }
        let Some(block) = self.hull_where(a, lock) else { return false };
        let p = block.lo;
        resumers.iter().all(|&r| !self.can_take_over(r, p, a))
            && !self.yields_before(a, lock, self.loc(s1))
            && !self.others(&self.f.lists.susplist[a], a).any(|s| self.hi(s).is_some_and(|h| h >= p))
            && !self.demoter_threat(p, &[a])
    }

    fn c2(&self, s1: &StmtId, s2: &StmtId) -> bool {
        let (a, b) = (s1.func, s2.func);
        let Some(p1) = self.f.prio_at(self.p, s1).map(|i| i.lo) else { return false };
        if b == a && !self.single(a) {
            // Another instance of the same body shares its priorities.
            if self.hi(b).is_some_and(|h| h >= p1) {
                return false;
            }
        } else if self.can_take_over(b, p1, a) {
            return false;
        }
        !self.others(&self.f.lists.susplist[a], a).any(|s| self.hi(s).is_some_and(|h| h >= p1))
            && !self.demoter_threat(p1, &[a])
    }

    fn c3(&self, s1: &StmtId, s2: &StmtId) -> bool {
        let (a, b) = (s1.func, s2.func);
        let Some(flag) = self.locks(s1).iter().find_map(|l| match l {
            NotionalLock::FlagSet(f) if self.locks(s2).contains(&NotionalLock::FlagChk(*f)) => Some(*f),
            _ => None,
        }) else {
            return false;
        };
        let (set, chk) = (NotionalLock::FlagSet(flag), NotionalLock::FlagChk(flag));
        let (Some(fblock), Some(cblock)) = (self.hull_where(a, set), self.hull_where(b, chk)) else {
            return false;
        };
        let resetters = self.resetters(flag);
        if resetters.iter().any(|&g| self.kind(g) == FuncKind::Isr) {
            return false;
        }
        let others: Vec<FuncId> = self.others(&resetters, a).collect();
        let sched_off = self.f.locks[a]
            .iter()
            .flatten()
            .filter(|l| l.contains(&set))
            .all(|l| l.contains(&NotionalLock::SchedOff));
        let (p1, q1, p2) = (fblock.lo, fblock.hi, cblock.lo);
        (sched_off || !others.iter().any(|&g| self.hi(g).is_some_and(|h| h >= p1)))
            && (others.is_empty() || !self.yields_before(a, set, self.loc(s1)))
            && q1 < p2
            && !self.yields_before(b, chk, self.loc(s2))
            && !self.others(&self.f.lists.susplist[b], b).any(|s| self.hi(s).is_some_and(|h| h >= p2))
            && !self.demoter_threat(p1.min(p2), &[a, b])
    }

    /// Functions writing `flag` with anything but the literal 1.
    fn resetters(&self, flag: VarId) -> Vec<FuncId> {
        self.p
            .functions
            .iter()
            .enumerate()
            .filter(|(g, f)| {
                self.f.multiplicity[*g] != Multiplicity::Zero
                    && f.cfg.instrs.iter().any(|i| matches!(&i.cmd, Command::Assign(x, e) if *x == flag && *e != Expr::Int(1)))
            })
            .map(|(g, _)| g)
            .collect()
    }
}

/// Task-like functions that may lower their own priority: a `set_priority`
/// that may target themselves with a value below their current one, or a
/// mutex release restoring a saved priority.
fn demoters(p: &Program, f: &AnalysisFacts, cfg: DetectorConfig) -> Vec<FuncId> {
    (0..p.functions.len())
        .filter(|&g| {
            let fun = &p.functions[g];
            fun.kind.is_task_like()
                && fun.cfg.instrs.iter().enumerate().any(|(k, ins)| match ins.cmd {
                    Command::SetPriority { prio, .. } => {
                        let self_target = f.handles.get(g, k).is_some_and(|r| r.may_run.contains(&g));
                        self_target && f.prio[g][ins.from].is_some_and(|iv| prio < iv.hi)
                    }
                    Command::Unlock(l) => {
                        cfg.mutex_mode != MutexMode::Plain && p.locks[l].kind == LockKind::Mutex
                    }
                    _ => false,
                })
        })
        .collect()
}
