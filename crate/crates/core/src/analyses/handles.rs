use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::dataflow::forward;
use crate::frontend::{Command, FuncId, FuncKind, Program, Target, VarId};

/// How many threads may run a function over a whole execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Multiplicity {
    Zero,
    One,
    Many,
}

impl Multiplicity {
    fn add(self, other: Multiplicity) -> Multiplicity {
        match (self, other) {
            (Multiplicity::Zero, x) | (x, Multiplicity::Zero) => x,
            _ => Multiplicity::Many,
        }
    }
}

/// Main and every ISR run as one thread; a task function runs once per
/// executed `create`, and a `create` on a cycle or inside a multi-instance
/// function counts as many.
pub fn multiplicity(p: &Program) -> Vec<Multiplicity> {
    let mut mult: Vec<Multiplicity> = p
        .functions
        .iter()
        .map(|f| if f.kind == FuncKind::Task { Multiplicity::Zero } else { Multiplicity::One })
        .collect();
    let cyclic: Vec<Vec<bool>> = p
        .functions
        .iter()
        .map(|f| f.cfg.instrs.iter().map(|i| f.cfg.on_cycle(i.from)).collect())
        .collect();
    loop {
        let mut next = mult.clone();
        for (m, f) in next.iter_mut().zip(&p.functions) {
            if f.kind == FuncKind::Task {
                *m = Multiplicity::Zero;
            }
        }
        for (g, f) in p.functions.iter().enumerate() {
            for (k, ins) in f.cfg.instrs.iter().enumerate() {
                if let Command::Create { func, .. } = ins.cmd {
                    let c = match mult[g] {
                        Multiplicity::Zero => Multiplicity::Zero,
                        Multiplicity::Many => Multiplicity::Many,
                        Multiplicity::One if cyclic[g][k] => Multiplicity::Many,
                        Multiplicity::One => Multiplicity::One,
                    };
                    if p.functions[func].kind == FuncKind::Task {
                        next[func] = next[func].add(c);
                    }
                }
            }
        }
        if next == mult {
            return mult;
        }
        mult = next;
    }
}

/// Functions a handle may refer to at one statement, and the single function
/// it must refer to when that is known.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Resolution {
    pub may_run: BTreeSet<FuncId>,
    pub must_run: Option<FuncId>,
}

/// Resolution of the target of every `set_priority`, `suspend` and `resume`,
/// keyed by (function, instruction index).
#[derive(Debug, Clone, Default, Serialize)]
pub struct HandleInfo {
    #[serde(skip)]
    pub at: BTreeMap<(FuncId, usize), Resolution>,
}

impl HandleInfo {
    pub fn get(&self, func: FuncId, index: usize) -> Option<&Resolution> {
        self.at.get(&(func, index))
    }
}

pub fn resolve_handles(p: &Program, mult: &[Multiplicity]) -> HandleInfo {
    let nv = p.vars.len();
    let mut created: Vec<Vec<(FuncId, FuncId)>> = vec![Vec::new(); nv];
    let mut assigned = vec![false; nv];
    for (g, f) in p.functions.iter().enumerate() {
        for ins in &f.cfg.instrs {
            match ins.cmd {
                Command::Create { func, handle, .. } => created[handle].push((g, func)),
                Command::Assign(x, _) => assigned[x] = true,
                _ => {}
            }
        }
    }
    let task_like: BTreeSet<FuncId> =
        (0..p.functions.len()).filter(|&f| p.functions[f].kind.is_task_like()).collect();
    let defs: Vec<Vec<Option<BTreeSet<VarId>>>> = p.functions.iter().map(|f| must_defined(&f.cfg)).collect();
    // Handles defined before every `start` are defined for all other threads.
    let main_cfg = &p.functions[p.main].cfg;
    let starts: Vec<&BTreeSet<VarId>> = main_cfg
        .instrs
        .iter()
        .filter(|i| i.cmd == Command::Start)
        .filter_map(|i| defs[p.main][i.from].as_ref())
        .collect();
    let defined_at_start = |v: VarId| !starts.is_empty() && starts.iter().all(|d| d.contains(&v));

    let mut info = HandleInfo::default();
    for (g, f) in p.functions.iter().enumerate() {
        for (k, ins) in f.cfg.instrs.iter().enumerate() {
            let v = match ins.cmd {
                Command::SetPriority { target: Target::Handle(v), .. }
                | Command::Suspend(Target::Handle(v))
                | Command::Resume(v) => v,
                Command::SetPriority { target: Target::Current, .. } | Command::Suspend(Target::Current) => {
                    info.at.insert((g, k), Resolution { may_run: [g].into(), must_run: Some(g) });
                    continue;
                }
                _ => continue,
            };
            let res = if assigned[v] {
                Resolution { may_run: task_like.clone(), must_run: None }
            } else {
                let here_defined = defs[g][ins.from].as_ref().is_some_and(|d| d.contains(&v));
                let from_main = created[v].iter().all(|&(c, _)| c == p.main);
                let defined = here_defined || (g != p.main && from_main && defined_at_start(v));
                let mut may: BTreeSet<FuncId> = created[v].iter().map(|&(_, t)| t).collect();
                if !defined {
                    may.insert(p.main);
                }
                let must = match created[v].as_slice() {
                    [(_, t)] if defined && mult[*t] == Multiplicity::One => Some(*t),
                    _ => None,
                };
                Resolution { may_run: may, must_run: must }
            };
            info.at.insert((g, k), res);
        }
    }
    info
}

/// Handle variables written by a `create` on every path.
fn must_defined(cfg: &crate::frontend::Cfg) -> Vec<Option<BTreeSet<VarId>>> {
    forward(
        cfg,
        BTreeSet::new(),
        |ins, d| {
            let mut d = d.clone();
            if let Command::Create { handle, .. } = ins.cmd {
                d.insert(handle);
            }
            d
        },
        |a, b| a.intersection(b).copied().collect(),
    )
}
