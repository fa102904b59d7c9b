use std::collections::BTreeSet;

use serde::Serialize;

use super::handles::HandleInfo;
use crate::frontend::{Command, FuncId, Program};

/// `susplist[a]` / `reslist[a]`: functions containing a `suspend` / `resume`
/// that may target a thread running `a`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TaskLists {
    pub susplist: Vec<BTreeSet<FuncId>>,
    pub reslist: Vec<BTreeSet<FuncId>>,
}

pub fn suspend_resume_analysis(p: &Program, handles: &HandleInfo) -> TaskLists {
    let n = p.functions.len();
    let mut lists = TaskLists { susplist: vec![BTreeSet::new(); n], reslist: vec![BTreeSet::new(); n] };
    for (b, f) in p.functions.iter().enumerate() {
        for (k, ins) in f.cfg.instrs.iter().enumerate() {
            let list = match ins.cmd {
                Command::Suspend(_) => &mut lists.susplist,
                Command::Resume(_) => &mut lists.reslist,
                _ => continue,
            };
            if let Some(r) = handles.get(b, k) {
                for &a in &r.may_run {
                    list[a].insert(b);
                }
            }
        }
    }
    lists
}
