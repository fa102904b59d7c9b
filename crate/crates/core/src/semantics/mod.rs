//! Labelled-transition semantics of the scheduler and a bounded explicit-state
//! explorer over it. The explorer is the ground truth the static detector is
//! checked against.

mod eval;
mod explore;
mod oracle;
mod step;

use std::hash::{DefaultHasher, Hash, Hasher};

use serde::Serialize;

use crate::config::DetectorConfig;
use crate::frontend::{FuncId, FuncKind, Loc, Program};

pub use eval::{eval, eval_bool, EvalError};
pub use explore::{explore, explore_ordered, CapsHit, Edge, Exploration, Order};
pub use oracle::{
    instrument, mhp, oib, oib_all, replay, Block, OibAll, OracleError, OracleResult, Witness,
    WitnessStep,
};
pub use step::{Label, Machine, Step, Successors};

pub type ThreadId = u32;

/// Exploration limits. Loop and ISR bounds are per thread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Bounds {
    pub loop_bound: u32,
    pub isr_bound: u32,
    pub step_bound: u32,
    pub state_cap: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { loop_bound: 2, isr_bound: 2, step_bound: 10_000, state_cap: 1_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ready,
    Blocked,
    Suspended,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ThreadState {
    pub func: FuncId,
    pub prio: u32,
    pub pc: Loc,
    pub status: Status,
    /// Priority to restore on unlock, per lock, when a mutex adjusted it.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub saved: Vec<Option<u32>>,
    /// Completed loop entries, per loop of the function.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub iters: Vec<u32>,
    /// Times this ISR has fired.
    pub fired: u32,
}

/// A scheduler configuration. Thread 0 is main, ISRs follow in declaration
/// order, created tasks take the next free id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct State {
    pub threads: Vec<ThreadState>,
    pub owner: Vec<Option<ThreadId>>,
    pub env: Vec<i64>,
    pub running: ThreadId,
    pub interrupted: ThreadId,
    pub sched_suspended: bool,
    pub ints_disabled: bool,
}

impl State {
    pub fn thread(&self, t: ThreadId) -> &ThreadState {
        &self.threads[t as usize]
    }

    pub fn kind(&self, p: &Program, t: ThreadId) -> FuncKind {
        p.functions[self.thread(t).func].kind
    }

    pub fn is_task(&self, p: &Program, t: ThreadId) -> bool {
        self.kind(p, t).is_task_like()
    }

    pub fn with_status(&self, st: Status) -> impl Iterator<Item = ThreadId> + '_ {
        (0..self.threads.len() as ThreadId).filter(move |&t| self.thread(t).status == st)
    }

    /// `ss ∨ id`: preemption by tasks is off.
    pub fn preemption_off(&self) -> bool {
        self.sched_suspended || self.ints_disabled
    }

    /// Deterministic 64-bit fingerprint.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.hash(&mut h);
        h.finish()
    }
}

/// The state before any transition: only main exists beside the ISRs, both
/// preemption switches are on and every variable is zero.
pub fn initial_state(p: &Program) -> State {
    Machine::new(p, DetectorConfig::default(), Bounds::default()).initial_state()
}
