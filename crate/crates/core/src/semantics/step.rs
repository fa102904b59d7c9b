use serde::Serialize;

use super::{eval, eval_bool, Bounds, State, Status, ThreadId, ThreadState};
use crate::config::{DetectorConfig, MutexMode};
use crate::frontend::{Command, FuncId, FuncKind, Instruction, LockKind, Program, Target};

/// What a transition executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Label {
    Instr { func: FuncId, index: usize },
    Unblock,
    TimeShare,
}

#[derive(Debug, Clone)]
pub struct Step {
    pub rule: &'static str,
    /// Thread that executed the instruction, or the thread unblocked or
    /// switched to.
    pub thread: ThreadId,
    pub label: Label,
    pub target: State,
}

#[derive(Debug, Default)]
pub struct Successors {
    pub steps: Vec<Step>,
    pub errors: Vec<String>,
    pub loop_bound_hit: bool,
    pub isr_bound_hit: bool,
}

/// A program together with the scheduler configuration and bounds.
pub struct Machine<'a> {
    pub prog: &'a Program,
    pub config: DetectorConfig,
    pub bounds: Bounds,
    ceilings: Vec<u32>,
    track_saved: bool,
}

impl<'a> Machine<'a> {
    pub fn new(prog: &'a Program, config: DetectorConfig, bounds: Bounds) -> Self {
        let track_saved = config.mutex_mode != MutexMode::Plain
            && prog.locks.iter().any(|l| l.kind == LockKind::Mutex);
        Machine { prog, config, bounds, ceilings: prog.ceilings(), track_saved }
    }

    fn new_thread(&self, func: FuncId, prio: u32, status: Status) -> ThreadState {
        let f = &self.prog.functions[func];
        ThreadState {
            func,
            prio,
            pc: f.cfg.entry,
            status,
            saved: if self.track_saved { vec![None; self.prog.locks.len()] } else { Vec::new() },
            iters: vec![0; f.cfg.num_loops],
            fired: 0,
        }
    }

    pub fn initial_state(&self) -> State {
        let p = self.prog;
        let mut threads = vec![self.new_thread(p.main, 0, Status::Ready)];
        for f in p.isrs() {
            threads.push(self.new_thread(f, p.isr_priority(f).unwrap(), Status::Suspended));
        }
        State {
            threads,
            owner: vec![None; p.locks.len()],
            env: vec![0; p.vars.len()],
            running: 0,
            interrupted: 0,
            sched_suspended: true,
            ints_disabled: true,
        }
    }

    fn is_task(&self, s: &State, t: ThreadId) -> bool {
        s.is_task(self.prog, t)
    }

    /// Ready task-like threads other than `except` with maximal priority among
    /// those satisfying `keep`.
    fn best_ready(&self, s: &State, except: Option<ThreadId>, keep: impl Fn(u32) -> bool) -> Vec<ThreadId> {
        let cands: Vec<ThreadId> = s
            .with_status(Status::Ready)
            .filter(|&t| Some(t) != except && self.is_task(s, t) && keep(s.thread(t).prio))
            .collect();
        let Some(top) = cands.iter().map(|&t| s.thread(t).prio).max() else {
            return Vec::new();
        };
        cands.into_iter().filter(|&t| s.thread(t).prio == top).collect()
    }

    fn handle(&self, s: &State, v: usize) -> Option<ThreadId> {
        let h = s.env[v];
        (h >= 0 && (h as usize) < s.threads.len() && self.is_task(s, h as ThreadId))
            .then_some(h as ThreadId)
    }

    pub fn successors(&self, s: &State) -> Successors {
        let mut out = Successors::default();
        let r = s.running;
        let rt = s.thread(r);
        let cfg = &self.prog.functions[rt.func].cfg;
        for &ix in cfg.outgoing(rt.pc) {
            self.exec(s, r, rt.func, ix, false, &mut out);
        }
        if !s.ints_disabled {
            for t in s.with_status(Status::Ready) {
                let th = s.thread(t);
                let f = &self.prog.functions[th.func];
                if f.kind != FuncKind::Isr
                    || t == r
                    || th.pc != f.cfg.entry
                    || th.prio <= s.thread(r).prio
                {
                    continue;
                }
                if th.fired >= self.bounds.isr_bound {
                    out.isr_bound_hit = true;
                    continue;
                }
                for &ix in f.cfg.outgoing(th.pc) {
                    self.exec(s, t, th.func, ix, true, &mut out);
                }
            }
        }
        if self.is_task(s, r) {
            let pr = s.thread(r).prio;
            for t in s.with_status(Status::Blocked) {
                let mut n = s.clone();
                n.threads[t as usize].status = Status::Ready;
                let rule = if s.preemption_off() || s.thread(t).prio <= pr {
                    "UNBLK-NS"
                } else {
                    n.running = t;
                    "UNBLK-CS"
                };
                out.steps.push(Step { rule, thread: t, label: Label::Unblock, target: n });
            }
            if self.config.round_robin && !s.preemption_off() {
                for t in s.with_status(Status::Ready) {
                    if t != r && self.is_task(s, t) && s.thread(t).prio == pr {
                        let mut n = s.clone();
                        n.running = t;
                        out.steps.push(Step { rule: "TSHARE", thread: t, label: Label::TimeShare, target: n });
                    }
                }
            }
        }
        out.steps.sort_by(|a, b| (a.rule, a.thread, a.label).cmp(&(b.rule, b.thread, b.label)));
        out
    }

    /// Apply instruction `ix` of `func` for thread `t`. `interrupt` means `t`
    /// is an ISR preempting the running thread from its entry.
    fn exec(&self, s: &State, t: ThreadId, func: FuncId, ix: usize, interrupt: bool, out: &mut Successors) {
        let ins = &self.prog.functions[func].cfg.instrs[ix];
        if let Some(l) = ins.loop_entry {
            if s.thread(t).iters[l] >= self.bounds.loop_bound {
                out.loop_bound_hit = true;
                return;
            }
        }
        let label = Label::Instr { func, index: ix };
        let mut steps = Vec::new();
        let mut emit = |rule: &'static str, mut n: State| {
            if interrupt {
                n.interrupted = if self.is_task(s, s.running) { s.running } else { s.interrupted };
                n.running = t;
                n.threads[t as usize].fired += 1;
            }
            self.complete_isr(&mut n, t, ins);
            steps.push(Step { rule, thread: t, label, target: n });
        };
        let advanced = || {
            let mut n = s.clone();
            advance(&mut n, t, ins);
            n
        };
        let task = self.is_task(s, t);
        let pr = s.thread(t).prio;
        let off = s.preemption_off();
        let int = |a: &'static str, b: &'static str| if interrupt { b } else { a };
        match &ins.cmd {
            Command::Skip => emit(int("SKIP", "SKIP-INT"), advanced()),
            Command::Assign(x, e) => match eval(e, &s.env) {
                Ok(v) => {
                    let mut n = advanced();
                    n.env[*x] = v;
                    emit(int("ASSIGN", "ASSIGN-INT"), n);
                }
                Err(err) => out.errors.push(format!("{}: {err}", ins.id)),
            },
            Command::Assume(b) => match eval_bool(b, &s.env) {
                Ok(true) => emit(int("ASSUME", "ASSUME-INT"), advanced()),
                Ok(false) => {}
                Err(err) => out.errors.push(format!("{}: {err}", ins.id)),
            },
            Command::DisableInt => {
                let mut n = advanced();
                n.ints_disabled = true;
                emit(int("DISINT", "DISINT-INT"), n);
            }
            Command::EnableInt => {
                let mut n = advanced();
                n.ints_disabled = false;
                if interrupt {
                    emit("ENINT-INT", n);
                } else if !task {
                    emit("ENINT-NS", n);
                } else {
                    let higher = self.best_ready(s, None, |q| q > pr);
                    if s.sched_suspended || higher.is_empty() {
                        emit("ENINT-NS", n);
                    } else {
                        for h in higher {
                            let mut m = n.clone();
                            m.running = h;
                            emit("ENINT-CS", m);
                        }
                    }
                }
            }
            Command::Lock(l) => match s.owner[*l] {
                None => {
                    let mut n = advanced();
                    n.owner[*l] = Some(t);
                    if task && self.adjusts(*l) && self.config.mutex_mode == MutexMode::Ceiling {
                        let th = &mut n.threads[t as usize];
                        th.saved[*l].get_or_insert(th.prio);
                        th.prio = th.prio.max(self.ceilings[*l]);
                    }
                    emit(int("LOCK-AQ", "LOCK-AQ-INT"), n);
                }
                Some(o) if o == t => emit(int("LOCK-AQ", "LOCK-AQ-INT"), advanced()),
                Some(holder) => {
                    if interrupt || !task || off {
                        return;
                    }
                    let mut n = s.clone();
                    if self.adjusts(*l)
                        && self.config.mutex_mode == MutexMode::Inheritance
                        && self.is_task(s, holder)
                        && s.thread(holder).prio < pr
                    {
                        let h = &mut n.threads[holder as usize];
                        h.saved[*l].get_or_insert(h.prio);
                        h.prio = pr;
                    }
                    n.threads[t as usize].status = Status::Blocked;
                    for next in self.best_ready(&n, Some(t), |_| true) {
                        let mut m = n.clone();
                        m.running = next;
                        emit("LOCK-CS", m);
                    }
                }
            },
            Command::Unlock(l) => {
                if interrupt {
                    emit("UNLOCK-INT", advanced());
                } else if s.owner[*l].is_none_or(|o| o == t) {
                    let mut n = advanced();
                    n.owner[*l] = None;
                    let th = &mut n.threads[t as usize];
                    if let Some(p) = th.saved.get_mut(*l).and_then(Option::take) {
                        th.prio = p;
                    }
                    emit("UNLOCK", n);
                }
            }
            _ if !task || interrupt => {}
            Command::Create { func: a, prio, handle } => {
                if self.prog.functions[*a].kind != FuncKind::Task {
                    return;
                }
                let mut n = advanced();
                let ts = n.threads.len() as ThreadId;
                n.threads.push(self.new_thread(*a, *prio, Status::Ready));
                n.env[*handle] = ts as i64;
                if *prio <= pr || off {
                    emit("CREATE-NS", n);
                } else {
                    n.running = ts;
                    emit("CREATE-CS", n);
                }
            }
            Command::SetPriority { target, prio } => {
                let ts = match target {
                    Target::Current => t,
                    Target::Handle(v) => match self.handle(s, *v) {
                        Some(h) => h,
                        None => return errors_push(out, ins, "invalid task handle"),
                    },
                };
                let mut n = advanced();
                n.threads[ts as usize].prio = *prio;
                let ready = s.thread(ts).status == Status::Ready;
                if pr >= *prio || !ready || off {
                    emit("SETP-NS", n);
                } else {
                    n.running = ts;
                    emit("SETP-CS", n);
                }
            }
            Command::Suspend(target) => {
                let ts = match target {
                    Target::Current => t,
                    Target::Handle(v) => match self.handle(s, *v) {
                        Some(h) => h,
                        None => return errors_push(out, ins, "invalid task handle"),
                    },
                };
                let mut n = advanced();
                n.threads[ts as usize].status = Status::Suspended;
                if ts != t {
                    emit("SUS-NS", n);
                } else if !off {
                    for next in self.best_ready(s, Some(t), |_| true) {
                        let mut m = n.clone();
                        m.running = next;
                        emit("SUS-CS", m);
                    }
                }
            }
            Command::Resume(v) => {
                let Some(ts) = self.handle(s, *v) else {
                    return errors_push(out, ins, "invalid task handle");
                };
                let st = s.thread(ts).status;
                let pts = s.thread(ts).prio;
                let mut n = advanced();
                n.threads[ts as usize].status = Status::Ready;
                if st != Status::Blocked && (off || pr >= pts) {
                    emit("RES-NS", n);
                } else if st == Status::Suspended && !off && pts > pr {
                    n.running = ts;
                    emit("RES-CS", n);
                }
            }
            Command::SuspendSched => {
                let mut n = advanced();
                n.sched_suspended = true;
                emit("SUSSCH", n);
            }
            Command::ResumeSched => {
                let mut n = advanced();
                n.sched_suspended = false;
                let higher = self.best_ready(s, None, |q| q > pr);
                if s.ints_disabled || higher.is_empty() {
                    emit("RESSCH-NS", n);
                } else {
                    for h in higher {
                        let mut m = n.clone();
                        m.running = h;
                        emit("RESSCH-CS", m);
                    }
                }
            }
            Command::Block => {
                if off {
                    emit("BLK-NS", advanced());
                } else {
                    let mut n = advanced();
                    n.threads[t as usize].status = Status::Blocked;
                    for next in self.best_ready(s, Some(t), |_| true) {
                        let mut m = n.clone();
                        m.running = next;
                        emit("BLK-CS", m);
                    }
                }
            }
            Command::Start => {
                if s.thread(t).func != self.prog.main {
                    return;
                }
                let mut n = advanced();
                for th in n.threads.iter_mut() {
                    if th.status == Status::Suspended {
                        th.status = Status::Ready;
                    }
                }
                n.sched_suspended = false;
                n.ints_disabled = false;
                let mut cands: Vec<ThreadId> = (0..s.threads.len() as ThreadId)
                    .filter(|&u| self.is_task(s, u) && s.thread(u).status != Status::Blocked)
                    .collect();
                let top = cands.iter().map(|&u| s.thread(u).prio).max().unwrap_or(0);
                cands.retain(|&u| s.thread(u).prio == top);
                for next in cands {
                    let mut m = n.clone();
                    m.running = next;
                    emit("START", m);
                }
            }
        }
        out.steps.extend(steps);
    }

    fn adjusts(&self, l: usize) -> bool {
        self.track_saved && self.prog.locks[l].kind == LockKind::Mutex
    }

    /// An ISR reaching its exit returns to the highest interrupted ISR, or
    /// else to the interrupted task.
    fn complete_isr(&self, n: &mut State, t: ThreadId, ins: &Instruction) {
        let f = &self.prog.functions[n.thread(t).func];
        if f.kind != FuncKind::Isr || ins.to != f.cfg.exit {
            return;
        }
        n.threads[t as usize].pc = f.cfg.entry;
        let resume = (0..n.threads.len() as ThreadId)
            .filter(|&u| {
                let th = n.thread(u);
                let g = &self.prog.functions[th.func];
                u != t && g.kind == FuncKind::Isr && th.status == Status::Ready && th.pc != g.cfg.entry
            })
            .max_by_key(|&u| n.thread(u).prio);
        match resume {
            Some(u) => n.running = u,
            None => {
                n.running = n.interrupted;
                n.interrupted = 0;
            }
        }
    }
}

fn errors_push(out: &mut Successors, ins: &Instruction, msg: &str) {
    out.errors.push(format!("{}: {msg}", ins.id));
}

fn advance(n: &mut State, t: ThreadId, ins: &Instruction) {
    let th = &mut n.threads[t as usize];
    th.pc = ins.to;
    if let Some(l) = ins.loop_entry {
        th.iters[l] += 1;
    }
}
