use std::collections::HashMap;
use std::sync::Arc;

use super::*;

const UNSET: Loc = usize::MAX;

enum Front {
    Open(Loc),
    Dangling(Vec<usize>),
}

struct Lowerer<'a> {
    func: FuncId,
    name: &'a Arc<str>,
    num_locs: usize,
    instrs: Vec<Instruction>,
    subs: HashMap<u32, u32>,
    loops: usize,
}

/// Lower a function body to its CFG. Branches become `assume(b)` /
/// `assume(!b)` edges leaving one location; loop bodies start with an edge
/// tagged as a loop entry.
pub(super) fn lower_function(func: FuncId, name: &Arc<str>, body: &[Stmt]) -> Cfg {
    let mut lw = Lowerer { func, name, num_locs: 1, instrs: Vec::new(), subs: HashMap::new(), loops: 0 };
    let front = lw.seq(body, Front::Open(0));
    let exit = lw.resolve(front);
    Cfg::new(lw.num_locs, 0, exit, lw.instrs, lw.loops)
}

impl Lowerer<'_> {
    fn new_loc(&mut self) -> Loc {
        self.num_locs += 1;
        self.num_locs - 1
    }

    fn resolve(&mut self, front: Front) -> Loc {
        match front {
            Front::Open(l) => l,
            Front::Dangling(ids) => {
                let l = self.new_loc();
                for i in ids {
                    self.instrs[i].to = l;
                }
                l
            }
        }
    }

    fn emit(&mut self, from: Loc, cmd: Command, line: u32, loop_entry: Option<LoopId>) -> usize {
        let sub = self.subs.entry(line).or_insert(0);
        let id = StmtId::new(self.func, self.name.clone(), line, *sub);
        *sub += 1;
        self.instrs.push(Instruction { id, from, cmd, to: UNSET, loop_entry, probe: None });
        self.instrs.len() - 1
    }

    fn seq(&mut self, body: &[Stmt], mut front: Front) -> Front {
        for s in body {
            front = self.stmt(s, front);
        }
        front
    }

    fn stmt(&mut self, s: &Stmt, front: Front) -> Front {
        match s {
            Stmt::Simple { cmd, line } => {
                let from = self.resolve(front);
                Front::Dangling(vec![self.emit(from, cmd.clone(), *line, None)])
            }
            Stmt::If { cond, then_body, else_body, line } => {
                let from = self.resolve(front);
                let t = self.emit(from, Command::Assume(cond.clone()), *line, None);
                let then_front = self.seq(then_body, Front::Dangling(vec![t]));
                let e = self.emit(from, Command::Assume(Expr::negation(cond.clone())), *line, None);
                let else_front =
                    self.seq(else_body.as_deref().unwrap_or(&[]), Front::Dangling(vec![e]));
                let mut ids = dangling(then_front);
                ids.extend(dangling(else_front));
                Front::Dangling(ids)
            }
            Stmt::While { cond, body, line } => self.lower_loop(front, cond.clone(), body, *line),
            Stmt::Forever { body, line } => self.lower_loop(front, Expr::Bool(true), body, *line),
        }
    }

    fn lower_loop(&mut self, front: Front, cond: Expr, body: &[Stmt], line: u32) -> Front {
        let head = self.resolve(front);
        let lid = self.loops;
        self.loops += 1;
        let enter = self.emit(head, Command::Assume(cond.clone()), line, Some(lid));
        let body_front = self.seq(body, Front::Dangling(vec![enter]));
        for i in dangling(body_front) {
            self.instrs[i].to = head;
        }
        let leave_cond = match cond {
            Expr::Bool(b) => Expr::Bool(!b),
            c => Expr::negation(c),
        };
        Front::Dangling(vec![self.emit(head, Command::Assume(leave_cond), line, None)])
    }
}

fn dangling(f: Front) -> Vec<usize> {
    match f {
        Front::Dangling(ids) => ids,
        Front::Open(_) => unreachable!("a frontier is open only before the first edge"),
    }
}
