use std::collections::VecDeque;

use crate::frontend::{Cfg, Instruction};

/// Forward worklist fixpoint. Returns the fact holding at each location
/// before its outgoing instructions; `None` marks unreachable locations.
pub(crate) fn forward<T: Clone + PartialEq>(
    cfg: &Cfg,
    init: T,
    mut transfer: impl FnMut(&Instruction, &T) -> T,
    join: impl Fn(&T, &T) -> T,
) -> Vec<Option<T>> {
    let mut facts: Vec<Option<T>> = vec![None; cfg.num_locs];
    facts[cfg.entry] = Some(init);
    let mut work = VecDeque::from([cfg.entry]);
    let mut queued = vec![false; cfg.num_locs];
    queued[cfg.entry] = true;
    while let Some(l) = work.pop_front() {
        queued[l] = false;
        let Some(here) = facts[l].clone() else { continue };
        for &i in cfg.outgoing(l) {
            let ins = &cfg.instrs[i];
            let out = transfer(ins, &here);
            let next = match &facts[ins.to] {
                None => out,
                Some(old) => join(old, &out),
            };
            if facts[ins.to].as_ref() != Some(&next) {
                facts[ins.to] = Some(next);
                if !queued[ins.to] {
                    queued[ins.to] = true;
                    work.push_back(ins.to);
                }
            }
        }
    }
    facts
}
