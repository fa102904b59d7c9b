use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use super::explore::{search, Exploration, Order};
use super::{Bounds, CapsHit, Label, Machine, State, Step, ThreadId};
use crate::config::DetectorConfig;
use crate::frontend::{Cfg, Command, FuncId, Instruction, Loc, Probe, Program, StmtId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("statement `{0}` does not exist")]
    UnknownStatement(String),
}

/// A statement wrapped by `skip` probes: `from -pre-> a -stmt-> b -post-> to`.
#[derive(Debug, Clone)]
pub struct Block {
    pub stmt: StmtId,
    pub func: FuncId,
    pub pre: usize,
    pub orig: usize,
    pub a: Loc,
    pub b: Loc,
}

impl Block {
    /// Threads of the block's function currently between its probes.
    pub fn inside<'s>(&self, s: &'s State) -> impl Iterator<Item = ThreadId> + 's {
        let (f, a, b) = (self.func, self.a, self.b);
        (0..s.threads.len() as ThreadId).filter(move |&t| {
            let th = s.thread(t);
            th.func == f && (th.pc == a || th.pc == b)
        })
    }

    fn is_pre(&self, l: Label) -> bool {
        l == Label::Instr { func: self.func, index: self.pre }
    }
}

/// Wrap each distinct statement of `stmts` in probes. Blocks are returned in
/// the order of `stmts`, with duplicates sharing one block.
pub fn instrument(p: &Program, stmts: &[StmtId]) -> Result<(Program, Vec<Block>), OracleError> {
    let mut q = p.clone();
    let mut blocks: Vec<Block> = Vec::new();
    for s in stmts {
        if let Some(b) = blocks.iter().find(|b| b.stmt == *s) {
            blocks.push(b.clone());
            continue;
        }
        let unknown = || OracleError::UnknownStatement(s.to_string());
        let f = q.functions.get_mut(s.func).ok_or_else(unknown)?;
        let k = f.cfg.instrs.iter().position(|i| i.id == *s && i.probe.is_none()).ok_or_else(unknown)?;
        let cfg = &f.cfg;
        let (a, b) = (cfg.num_locs, cfg.num_locs + 1);
        let mut instrs = cfg.instrs.clone();
        let orig = instrs[k].clone();
        instrs[k] = Instruction { from: a, to: b, loop_entry: None, ..orig.clone() };
        // An assume's pre probe tests the same guard, so a thread never enters
        // the block of a branch it cannot take.
        let probe = |from, to, kind, loop_entry| Instruction {
            id: orig.id.clone(),
            from,
            cmd: match (&orig.cmd, kind) {
                (Command::Assume(b), Probe::Pre) => Command::Assume(b.clone()),
                _ => Command::Skip,
            },
            to,
            loop_entry,
            probe: Some(kind),
        };
        instrs.push(probe(orig.from, a, Probe::Pre, orig.loop_entry));
        instrs.push(probe(b, orig.to, Probe::Post, None));
        let pre = instrs.len() - 2;
        f.cfg = Cfg::new(cfg.num_locs + 2, cfg.entry, cfg.exit, instrs, cfg.num_loops);
        blocks.push(Block { stmt: s.clone(), func: s.func, pre, orig: k, a, b });
    }
    Ok((q, blocks))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct WitnessStep {
    pub rule: &'static str,
    /// Executed statement; probes print as `pre:f:l` / `post:f:l`.
    pub stmt: Option<String>,
    pub thread: ThreadId,
    #[serde(skip)]
    pub label: Label,
    #[serde(serialize_with = "hex")]
    pub state_hash: u64,
}

fn hex<S: Serializer>(h: &u64, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(&format_args!("{h:016x}"))
}

/// An execution of the instrumented program ending in the observed event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Witness {
    /// Statements wrapped by probes, in instrumentation order.
    pub probes: Vec<String>,
    pub steps: Vec<WitnessStep>,
    /// Step where the thread that stays inside the first block entered it.
    pub pre_index: usize,
    /// Final step: the second statement (or block entry) by another thread.
    pub occurrence_index: usize,
    pub inside_thread: ThreadId,
    pub other_thread: ThreadId,
}

fn step_text(p: &Program, l: Label) -> Option<String> {
    let Label::Instr { func, index } = l else { return None };
    let ins = &p.functions[func].cfg.instrs[index];
    Some(match ins.probe {
        None => ins.id.to_string(),
        Some(Probe::Pre) => format!("pre:{}", ins.id),
        Some(Probe::Post) => format!("post:{}", ins.id),
    })
}

fn build_witness(
    q: &Program,
    ex: &Exploration,
    probes: &[StmtId],
    src: usize,
    last: &Step,
    entry: &Block,
    inside: ThreadId,
) -> Witness {
    let mut steps: Vec<WitnessStep> = ex
        .path_to(src)
        .into_iter()
        .map(|(e, j)| WitnessStep {
            rule: e.rule,
            stmt: step_text(q, e.label),
            thread: e.thread,
            label: e.label,
            state_hash: ex.states[j].fingerprint(),
        })
        .collect();
    steps.push(WitnessStep {
        rule: last.rule,
        stmt: step_text(q, last.label),
        thread: last.thread,
        label: last.label,
        state_hash: last.target.fingerprint(),
    });
    let pre_index = steps
        .iter()
        .rposition(|s| s.thread == inside && entry.is_pre(s.label))
        .unwrap_or(0);
    Witness {
        probes: probes.iter().map(|s| s.to_string()).collect(),
        occurrence_index: steps.len() - 1,
        pre_index,
        steps,
        inside_thread: inside,
        other_thread: last.thread,
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleResult {
    pub holds: bool,
    pub witness: Option<Witness>,
    pub states: usize,
    pub caps_hit: CapsHit,
}

fn first_other(b: &Block, s: &State, u: ThreadId) -> Option<ThreadId> {
    b.inside(s).find(|&t| t != u)
}

/// Does `s2` execute while another thread is inside the probes around `s1`?
pub fn oib(
    p: &Program,
    cfg: DetectorConfig,
    bounds: Bounds,
    s1: &StmtId,
    s2: &StmtId,
) -> Result<OracleResult, OracleError> {
    p.instruction(s2).ok_or_else(|| OracleError::UnknownStatement(s2.to_string()))?;
    let probes = [s1.clone()];
    let (q, blocks) = instrument(p, &probes)?;
    let b1 = &blocks[0];
    let target = q.functions[s2.func]
        .cfg
        .instrs
        .iter()
        .position(|i| i.id == *s2 && i.probe.is_none())
        .map(|index| Label::Instr { func: s2.func, index })
        .unwrap();
    let m = Machine::new(&q, cfg, bounds);
    let mut hit = None;
    let ex = search(&m, Order::Bfs, |i, src, step| {
        if step.label != target {
            return false;
        }
        match first_other(b1, src, step.thread) {
            Some(t) => {
                hit = Some((i, step.clone(), t));
                true
            }
            None => false,
        }
    });
    let witness = hit.map(|(i, st, t)| build_witness(&q, &ex, &probes, i, &st, b1, t));
    Ok(OracleResult { holds: witness.is_some(), witness, states: ex.len(), caps_hit: ex.stats })
}

/// Every statement that can occur in between `s1`, from one exploration.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OibAll {
    pub witnesses: BTreeMap<StmtId, Witness>,
    pub states: usize,
    pub caps_hit: CapsHit,
}

pub fn oib_all(p: &Program, cfg: DetectorConfig, bounds: Bounds, s1: &StmtId) -> Result<OibAll, OracleError> {
    let probes = [s1.clone()];
    let (q, blocks) = instrument(p, &probes)?;
    let b1 = &blocks[0];
    let m = Machine::new(&q, cfg, bounds);
    let mut hits: BTreeMap<StmtId, (usize, Step, ThreadId)> = BTreeMap::new();
    let ex = search(&m, Order::Bfs, |i, src, step| {
        let Label::Instr { func, index } = step.label else { return false };
        let ins = &q.functions[func].cfg.instrs[index];
        if ins.probe.is_none() && !hits.contains_key(&ins.id) {
            if let Some(t) = first_other(b1, src, step.thread) {
                hits.insert(ins.id.clone(), (i, step.clone(), t));
            }
        }
        false
    });
    let witnesses = hits
        .into_iter()
        .map(|(s2, (i, st, t))| (s2, build_witness(&q, &ex, &probes, i, &st, b1, t)))
        .collect();
    Ok(OibAll { witnesses, states: ex.len(), caps_hit: ex.stats })
}

/// May `s1` and `s2` be in progress at once: one thread enters the block of
/// one statement while another thread is inside the block of the other.
pub fn mhp(
    p: &Program,
    cfg: DetectorConfig,
    bounds: Bounds,
    s1: &StmtId,
    s2: &StmtId,
) -> Result<OracleResult, OracleError> {
    let probes = [s1.clone(), s2.clone()];
    let (q, blocks) = instrument(p, &probes)?;
    let (b1, b2) = (&blocks[0], &blocks[1]);
    let m = Machine::new(&q, cfg, bounds);
    let mut hit = None;
    let ex = search(&m, Order::Bfs, |i, src, step| {
        for (enter, other) in [(b2, b1), (b1, b2)] {
            if enter.is_pre(step.label) {
                if let Some(t) = first_other(other, src, step.thread) {
                    hit = Some((i, step.clone(), t, other.clone()));
                    return true;
                }
            }
        }
        false
    });
    let witness = hit.map(|(i, st, t, other)| build_witness(&q, &ex, &probes, i, &st, &other, t));
    Ok(OracleResult { holds: witness.is_some(), witness, states: ex.len(), caps_hit: ex.stats })
}

/// Re-execute a witness step by step, matching rule, thread, statement and
/// resulting state. Returns the final state.
pub fn replay(p: &Program, cfg: DetectorConfig, bounds: Bounds, w: &Witness) -> Result<State, String> {
    let probes = w
        .probes
        .iter()
        .map(|s| p.resolve_stmt(s).ok_or_else(|| format!("unknown statement `{s}`")))
        .collect::<Result<Vec<_>, _>>()?;
    let (q, blocks) = instrument(p, &probes).map_err(|e| e.to_string())?;
    let m = Machine::new(&q, cfg, bounds);
    let mut s = m.initial_state();
    for (k, ws) in w.steps.iter().enumerate() {
        let next = m
            .successors(&s)
            .steps
            .into_iter()
            .find(|st| {
                st.rule == ws.rule
                    && st.thread == ws.thread
                    && st.label == ws.label
                    && st.target.fingerprint() == ws.state_hash
            })
            .ok_or_else(|| format!("step {k} ({} by thread {}) is not enabled", ws.rule, ws.thread))?;
        if k == w.occurrence_index && !blocks.iter().any(|b| b.inside(&s).any(|t| t == w.inside_thread)) {
            return Err(format!("step {k} does not happen inside a probed block"));
        }
        s = next.target;
    }
    Ok(s)
}
