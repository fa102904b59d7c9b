use serde::Serialize;

use super::*;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub stmt: StmtId,
    pub message: String,
}

/// Check command placement. An empty result means the program is valid.
pub fn validate(p: &Program) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let m = p.max_prio;
    for f in &p.functions {
        for ins in &f.cfg.instrs {
            let mut diag = |message: String| out.push(Diagnostic { stmt: ins.id.clone(), message });
            if f.kind == FuncKind::Isr {
                if !ins.cmd.allowed_in_isr() {
                    diag(format!("{} not permitted in ISR", ins.cmd.keyword()));
                }
                if ins.loop_entry.is_some() {
                    diag("loops not permitted in ISR".into());
                }
            }
            match &ins.cmd {
                Command::Start if f.kind != FuncKind::Main => {
                    diag("start allowed only in main".into())
                }
                Command::Create { func, prio, .. } => {
                    let target = &p.functions[*func];
                    if target.kind != FuncKind::Task {
                        diag(format!("create target `{}` is not a task function", target.name));
                    }
                    if *prio < 1 || *prio > m {
                        diag(format!("create priority {prio} outside 1..{m}"));
                    }
                }
                Command::SetPriority { prio, .. } if *prio < 1 || *prio > m => {
                    diag(format!("set_priority priority {prio} outside 1..{m}"))
                }
                _ => {}
            }
        }
    }
    out
}
