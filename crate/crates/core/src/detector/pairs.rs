use serde::Serialize;

use crate::analyses::Multiplicity;
use crate::frontend::{Command, Program, StmtId, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Access {
    Read,
    Write,
}

/// Two statements touching one shared variable, at least one writing it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConflictPair {
    pub s1: StmtId,
    pub s2: StmtId,
    #[serde(skip)]
    pub var_id: VarId,
    pub var: String,
    pub kinds: (Access, Access),
}

/// Variables written only by `create`: thread handles, not shared data.
fn handle_only(p: &Program) -> Vec<bool> {
    let mut created = vec![false; p.vars.len()];
    let mut assigned = vec![false; p.vars.len()];
    for f in &p.functions {
        for ins in &f.cfg.instrs {
            match ins.cmd {
                Command::Create { handle, .. } => created[handle] = true,
                Command::Assign(x, _) => assigned[x] = true,
                _ => {}
            }
        }
    }
    created.iter().zip(&assigned).map(|(c, a)| *c && !*a).collect()
}

/// All conflicting pairs, in statement order. A function paired with itself
/// needs more than one thread.
pub fn conflicting_pairs(p: &Program, mult: &[Multiplicity]) -> Vec<ConflictPair> {
    let skip = handle_only(p);
    let mut accesses: Vec<(StmtId, VarId, Access)> = Vec::new();
    for (g, f) in p.functions.iter().enumerate() {
        if mult[g] == Multiplicity::Zero {
            continue;
        }
        for ins in &f.cfg.instrs {
            let (reads, write) = ins.cmd.accesses();
            let mut vars: Vec<(VarId, Access)> = reads.into_iter().map(|v| (v, Access::Read)).collect();
            if let Some(w) = write {
                vars.retain(|(v, _)| *v != w);
                vars.push((w, Access::Write));
            }
            vars.sort_by_key(|(v, _)| *v);
            for (v, a) in vars {
                if !skip[v] {
                    accesses.push((ins.id.clone(), v, a));
                }
            }
        }
    }
    accesses.sort_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));
    let mut out = Vec::new();
    for (i, (s1, v1, a1)) in accesses.iter().enumerate() {
        for (s2, v2, a2) in &accesses[i..] {
            if v1 != v2 || (*a1 == Access::Read && *a2 == Access::Read) {
                continue;
            }
            if s1.func == s2.func && mult[s1.func] != Multiplicity::Many {
                continue;
            }
            out.push(ConflictPair {
                s1: s1.clone(),
                s2: s2.clone(),
                var_id: *v1,
                var: p.vars[*v1].clone(),
                kinds: (*a1, *a2),
            });
        }
    }
    out
}
