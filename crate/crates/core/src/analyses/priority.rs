use serde::{Serialize, Serializer};

use super::dataflow::forward;
use super::handles::{HandleInfo, Multiplicity};
use crate::config::MutexMode;
use crate::frontend::{Command, Diagnostic, FuncId, FuncKind, LockKind, Program, Target};

/// Closed range of priorities a thread may have just before a statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: u32,
    pub hi: u32,
}

impl Interval {
    pub fn point(p: u32) -> Self {
        Interval { lo: p, hi: p }
    }

    pub fn hull(self, o: Interval) -> Interval {
        Interval { lo: self.lo.min(o.lo), hi: self.hi.max(o.hi) }
    }

    pub fn contains(self, p: u32) -> bool {
        self.lo <= p && p <= self.hi
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.lo, self.hi].serialize(s)
    }
}

/// Priority saved by a mutex acquisition, to be restored on release.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Saved {
    No,
    Yes(Interval),
    Maybe(Interval),
}

impl Saved {
    fn join(self, o: Saved) -> Saved {
        match (self, o) {
            (Saved::No, Saved::No) => Saved::No,
            (Saved::Yes(a), Saved::Yes(b)) => Saved::Yes(a.hull(b)),
            (Saved::No, Saved::Yes(a) | Saved::Maybe(a)) | (Saved::Yes(a) | Saved::Maybe(a), Saved::No) => {
                Saved::Maybe(a)
            }
            (Saved::Yes(a) | Saved::Maybe(a), Saved::Yes(b) | Saved::Maybe(b)) => Saved::Maybe(a.hull(b)),
        }
    }

    fn interval(self) -> Option<Interval> {
        match self {
            Saved::No => None,
            Saved::Yes(i) | Saved::Maybe(i) => Some(i),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct PrioState {
    cur: Interval,
    saved: Vec<Saved>,
}

/// Per function, per location: the priority interval, `None` if unreachable
/// or the function never runs.
pub type PrioFacts = Vec<Vec<Option<Interval>>>;

/// Two-pass interval analysis. Pass 1 follows each function's own priority
/// changes; pass 2 widens a function by every priority another thread may
/// assign to it.
pub fn priority_analysis(
    p: &Program,
    handles: &HandleInfo,
    mult: &[Multiplicity],
    mode: MutexMode,
) -> (PrioFacts, Vec<Diagnostic>) {
    let m = p.max_prio;
    let ceilings = p.ceilings();
    let mut diags = Vec::new();
    let mut init: Vec<Option<Interval>> = vec![None; p.functions.len()];
    for (g, f) in p.functions.iter().enumerate() {
        match f.kind {
            FuncKind::Main => init[g] = Some(Interval::point(0)),
            FuncKind::Isr => init[g] = p.isr_priority(g).map(Interval::point),
            FuncKind::Task => {}
        }
    }
    for f in &p.functions {
        for ins in &f.cfg.instrs {
            if let Command::Create { func, prio, .. } = ins.cmd {
                let iv = Interval::point(prio);
                init[func] = Some(init[func].map_or(iv, |o| o.hull(iv)));
            }
        }
    }

    // A set_priority is local when it must target the executing thread.
    let is_local = |g: FuncId, k: usize| -> bool {
        match p.functions[g].cfg.instrs[k].cmd {
            Command::SetPriority { target: Target::Current, .. } => true,
            Command::SetPriority { target: Target::Handle(_), .. } => {
                mult[g] == Multiplicity::One
                    && handles.get(g, k).is_some_and(|r| r.must_run == Some(g))
            }
            _ => false,
        }
    };

    let mut facts: PrioFacts = Vec::new();
    for (g, f) in p.functions.iter().enumerate() {
        let Some(start) = init[g] else {
            facts.push(vec![None; f.cfg.num_locs]);
            continue;
        };
        let task = f.kind.is_task_like();
        let adjusts = |l: usize| task && mode != MutexMode::Plain && p.locks[l].kind == LockKind::Mutex;
        let inherit = mode == MutexMode::Inheritance;
        let index_of = |ins: &crate::frontend::Instruction| {
            f.cfg.instrs.iter().position(|i| std::ptr::eq(i, ins)).unwrap()
        };
        let st0 = PrioState { cur: start, saved: vec![Saved::No; p.locks.len()] };
        let res = forward(
            &f.cfg,
            st0,
            |ins, st| {
                let mut st = st.clone();
                match ins.cmd {
                    Command::SetPriority { prio, .. } if is_local(g, index_of(ins)) => {
                        st.cur = Interval::point(prio);
                    }
                    Command::Lock(l) if adjusts(l) => {
                        let c = ceilings[l];
                        let raised = if inherit {
                            Interval { lo: st.cur.lo, hi: st.cur.hi.max(c) }
                        } else {
                            Interval { lo: st.cur.lo.max(c), hi: st.cur.hi.max(c) }
                        };
                        match st.saved[l] {
                            Saved::No => {
                                st.saved[l] = Saved::Yes(st.cur);
                                st.cur = raised;
                            }
                            Saved::Yes(_) if inherit => st.cur = raised,
                            Saved::Yes(_) => {}
                            Saved::Maybe(s) => {
                                st.saved[l] = Saved::Yes(s.hull(st.cur));
                                st.cur = st.cur.hull(raised);
                            }
                        }
                    }
                    Command::Unlock(l) if adjusts(l) => {
                        st.cur = match st.saved[l] {
                            Saved::No => st.cur,
                            Saved::Yes(s) if !inherit => s,
                            Saved::Yes(s) | Saved::Maybe(s) => s.hull(st.cur),
                        };
                        st.saved[l] = Saved::No;
                    }
                    _ => {}
                }
                if inherit {
                    // While a mutex is held, a waiter may lift the holder to
                    // the ceiling at any point; remember every pre-lift value.
                    for (saved, &ceiling) in st.saved.iter_mut().zip(ceilings.iter()) {
                        if let Some(s) = saved.interval() {
                            st.cur.hi = st.cur.hi.max(ceiling);
                            let s = s.hull(st.cur);
                            *saved = match *saved {
                                Saved::Yes(_) => Saved::Yes(s),
                                _ => Saved::Maybe(s),
                            };
                        }
                    }
                }
                st
            },
            |a, b| PrioState {
                cur: a.cur.hull(b.cur),
                saved: a.saved.iter().zip(&b.saved).map(|(x, y)| x.join(*y)).collect(),
            },
        );
        facts.push(res.into_iter().map(|s| s.map(|s| s.cur)).collect());
    }

    // Pass 2: priorities set on a function from outside.
    let mut widen: Vec<Vec<u32>> = vec![Vec::new(); p.functions.len()];
    for (g, f) in p.functions.iter().enumerate() {
        for (k, ins) in f.cfg.instrs.iter().enumerate() {
            let Command::SetPriority { prio, .. } = ins.cmd else { continue };
            if prio < 1 || prio > m {
                diags.push(Diagnostic {
                    stmt: ins.id.clone(),
                    message: format!("set_priority priority {prio} outside 1..{m}"),
                });
            }
            if is_local(g, k) {
                continue;
            }
            if let Some(r) = handles.get(g, k) {
                for &a in &r.may_run {
                    if p.functions[a].kind.is_task_like() {
                        widen[a].push(prio);
                    }
                }
            }
        }
    }
    for (a, ps) in widen.into_iter().enumerate() {
        for pr in ps {
            for iv in facts[a].iter_mut().flatten() {
                *iv = iv.hull(Interval::point(pr));
            }
        }
    }
    (facts, diags)
}
