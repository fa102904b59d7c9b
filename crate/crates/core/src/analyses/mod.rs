//! Pre-analyses feeding the race rules: handle resolution, thread
//! multiplicity, priority intervals, suspend/resume lists and must-locksets.

mod dataflow;
mod handles;
mod lists;
mod lockset;
mod priority;

use serde_json::{json, Value};

use crate::config::DetectorConfig;
use crate::frontend::{Command, Diagnostic, FuncId, Program, StmtId};

pub use handles::{multiplicity, resolve_handles, HandleInfo, Multiplicity, Resolution};
pub use lists::{suspend_resume_analysis, TaskLists};
pub use lockset::{lockset_analysis, LockFacts, LockSet, NotionalLock};
pub use priority::{priority_analysis, Interval, PrioFacts};

/// Everything the rules consult, indexed by function and location.
#[derive(Debug, Clone)]
pub struct AnalysisFacts {
    pub prio: PrioFacts,
    pub locks: LockFacts,
    pub lists: TaskLists,
    pub handles: HandleInfo,
    pub multiplicity: Vec<Multiplicity>,
    /// Highest priority any statement of the function may run at.
    pub func_hi: Vec<Option<u32>>,
    /// Main locations that execute before the scheduler can switch threads.
    pub pre_start: Vec<bool>,
    pub diagnostics: Vec<Diagnostic>,
    main: FuncId,
    empty: LockSet,
}

pub fn analyze(p: &Program, cfg: &DetectorConfig) -> AnalysisFacts {
    let mult = multiplicity(p);
    let handles = resolve_handles(p, &mult);
    let (prio, diagnostics) = priority_analysis(p, &handles, &mult, cfg.mutex_mode);
    let locks = lockset_analysis(p, &handles);
    let lists = suspend_resume_analysis(p, &handles);
    let func_hi = prio.iter().map(|f| f.iter().flatten().map(|i| i.hi).max()).collect();

    let main = &p.functions[p.main].cfg;
    let mut released = vec![false; main.num_locs];
    for ins in &main.instrs {
        if matches!(ins.cmd, Command::Start | Command::EnableInt | Command::ResumeSched) {
            for (l, r) in main.reachable_from(ins.to, |_| true).into_iter().enumerate() {
                released[l] |= r;
            }
        }
    }
    AnalysisFacts {
        prio,
        locks,
        lists,
        handles,
        multiplicity: mult,
        func_hi,
        pre_start: released.into_iter().map(|r| !r).collect(),
        diagnostics,
        main: p.main,
        empty: LockSet::new(),
    }
}

impl AnalysisFacts {
    fn loc(p: &Program, s: &StmtId) -> usize {
        p.instruction(s).map(|i| i.from).expect("statement of this program")
    }

    pub fn prio_at(&self, p: &Program, s: &StmtId) -> Option<Interval> {
        self.prio[s.func][Self::loc(p, s)]
    }

    pub fn locks_at(&self, p: &Program, s: &StmtId) -> &LockSet {
        self.locks[s.func][Self::loc(p, s)].as_ref().unwrap_or(&self.empty)
    }

    /// Functions whose threads are suspended whenever `s` is about to run.
    pub fn suspended_at(&self, p: &Program, s: &StmtId) -> Vec<FuncId> {
        self.locks_at(p, s)
            .iter()
            .filter_map(|l| match l {
                NotionalLock::SuspBlock(f) => Some(*f),
                _ => None,
            })
            .collect()
    }

    pub fn is_pre_start(&self, p: &Program, s: &StmtId) -> bool {
        s.func == self.main && self.pre_start[Self::loc(p, s)]
    }

    /// Machine-readable fact table: one row per statement.
    pub fn to_json(&self, p: &Program) -> Value {
        let rows: Vec<Value> = p
            .statements()
            .iter()
            .map(|(s, c)| {
                let names = |fs: Vec<FuncId>| -> Vec<String> {
                    fs.into_iter().map(|f| p.functions[f].name.to_string()).collect()
                };
                json!({
                    "stmt": s,
                    "command": p.command_to_string(c),
                    "prio": self.prio_at(p, s),
                    "locks": self.locks_at(p, s).iter().map(|l| l.describe(p)).collect::<Vec<_>>(),
                    "suspended": names(self.suspended_at(p, s)),
                })
            })
            .collect();
        let by_func = |sets: &[std::collections::BTreeSet<FuncId>]| -> Value {
            p.functions
                .iter()
                .zip(sets)
                .map(|(f, set)| {
                    let v: Vec<&str> = set.iter().map(|g| &*p.functions[*g].name).collect();
                    (f.name.to_string(), json!(v))
                })
                .collect::<serde_json::Map<_, _>>()
                .into()
        };
        json!({
            "statements": rows,
            "susplist": by_func(&self.lists.susplist),
            "reslist": by_func(&self.lists.reslist),
            "multiplicity": p.functions.iter().zip(&self.multiplicity)
                .map(|(f, m)| (f.name.to_string(), json!(m)))
                .collect::<serde_json::Map<_, _>>(),
            "diagnostics": self.diagnostics,
        })
    }
}
