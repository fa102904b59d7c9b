use std::collections::VecDeque;

use indexmap::IndexSet;
use serde::Serialize;

use super::{Label, Machine, State, Step, ThreadId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Order {
    #[default]
    Bfs,
    Dfs,
}

/// How a state was first reached.
#[derive(Debug, Clone, Copy)]
pub struct Edge {
    pub parent: usize,
    pub rule: &'static str,
    pub thread: ThreadId,
    pub label: Label,
}

/// Reachable states under the bounds, with a spanning tree of first visits.
#[derive(Debug, Default)]
pub struct Exploration {
    pub states: IndexSet<State>,
    pub parent: Vec<Option<Edge>>,
    pub depth: Vec<u32>,
    pub transitions: usize,
    /// States without successors.
    pub terminal: Vec<usize>,
    pub errors: Vec<(usize, String)>,
    pub stats: CapsHit,
    /// The visitor asked to stop early.
    pub stopped: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CapsHit {
    pub state_cap: bool,
    pub step_bound: bool,
    pub loop_bound: bool,
    pub isr_bound: bool,
}

impl CapsHit {
    pub fn any(&self) -> bool {
        self.state_cap || self.step_bound || self.loop_bound || self.isr_bound
    }
}

impl Exploration {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Edges from the initial state to `idx`.
    pub fn path_to(&self, mut idx: usize) -> Vec<(Edge, usize)> {
        let mut path = Vec::new();
        while let Some(e) = self.parent[idx] {
            path.push((e, idx));
            idx = e.parent;
        }
        path.reverse();
        path
    }
}

/// Breadth-first exploration of every reachable state.
pub fn explore(m: &Machine) -> Exploration {
    explore_ordered(m, Order::Bfs)
}

pub fn explore_ordered(m: &Machine, order: Order) -> Exploration {
    search(m, order, |_, _, _| false)
}

/// Explore, calling `visit(source_index, source, step)` on every transition.
/// Returning `true` stops the search.
pub(crate) fn search(
    m: &Machine,
    order: Order,
    mut visit: impl FnMut(usize, &State, &Step) -> bool,
) -> Exploration {
    let mut ex = Exploration::default();
    ex.states.insert(m.initial_state());
    ex.parent.push(None);
    ex.depth.push(0);
    let mut work = VecDeque::from([0usize]);
    while let Some(i) = match order {
        Order::Bfs => work.pop_front(),
        Order::Dfs => work.pop_back(),
    } {
        if ex.depth[i] >= m.bounds.step_bound {
            ex.stats.step_bound = true;
            continue;
        }
        let src = ex.states[i].clone();
        let succ = m.successors(&src);
        ex.stats.loop_bound |= succ.loop_bound_hit;
        ex.stats.isr_bound |= succ.isr_bound_hit;
        ex.errors.extend(succ.errors.into_iter().map(|e| (i, e)));
        if succ.steps.is_empty() {
            ex.terminal.push(i);
        }
        for step in succ.steps {
            ex.transitions += 1;
            if visit(i, &src, &step) {
                ex.stopped = true;
                return ex;
            }
            if ex.states.contains(&step.target) {
                continue;
            }
            if ex.states.len() >= m.bounds.state_cap {
                ex.stats.state_cap = true;
                continue;
            }
            let (j, _) = ex.states.insert_full(step.target);
            ex.parent.push(Some(Edge { parent: i, rule: step.rule, thread: step.thread, label: step.label }));
            ex.depth.push(ex.depth[i] + 1);
            work.push_back(j);
        }
    }
    ex
}
