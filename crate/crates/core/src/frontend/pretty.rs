use std::fmt::Write;

use super::*;

/// Render a program back to source. Reparsing the output yields a program
/// with the same [`shape_of`].
pub fn pretty_print(p: &Program) -> String {
    let mut out = String::new();
    writeln!(out, "maxprio {};", p.max_prio).unwrap();
    if !p.vars.is_empty() {
        writeln!(out, "var {};", p.vars.join(", ")).unwrap();
    }
    for l in &p.locks {
        let kw = match l.kind {
            LockKind::Plain => "lock",
            LockKind::Mutex => "mutex",
        };
        writeln!(out, "{kw} {};", l.name).unwrap();
    }
    for f in &p.functions {
        match f.kind {
            FuncKind::Main => out.push_str("main {\n"),
            FuncKind::Task => writeln!(out, "task {} {{", f.name).unwrap(),
            FuncKind::Isr => writeln!(out, "isr {} {{", f.name).unwrap(),
        }
        stmts(p, &f.body, 1, &mut out);
        out.push_str("}\n");
    }
    out
}

fn indent(depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn stmts(p: &Program, body: &[Stmt], depth: usize, out: &mut String) {
    for s in body {
        indent(depth, out);
        match s {
            Stmt::Simple { cmd, .. } => {
                out.push_str(&command_string(p, cmd));
                out.push_str(";\n");
            }
            Stmt::If { cond, then_body, else_body, .. } => {
                writeln!(out, "if ({}) {{", expr_string(p, cond)).unwrap();
                stmts(p, then_body, depth + 1, out);
                indent(depth, out);
                match else_body {
                    Some(e) => {
                        out.push_str("} else {\n");
                        stmts(p, e, depth + 1, out);
                        indent(depth, out);
                        out.push_str("}\n");
                    }
                    None => out.push_str("}\n"),
                }
            }
            Stmt::While { cond, body, .. } => {
                writeln!(out, "while ({}) {{", expr_string(p, cond)).unwrap();
                stmts(p, body, depth + 1, out);
                indent(depth, out);
                out.push_str("}\n");
            }
            Stmt::Forever { body, .. } => {
                out.push_str("for (;;) {\n");
                stmts(p, body, depth + 1, out);
                indent(depth, out);
                out.push_str("}\n");
            }
        }
    }
}

fn target_string(p: &Program, t: &Target) -> String {
    match t {
        Target::Current => "NULL".into(),
        Target::Handle(v) => p.vars[*v].clone(),
    }
}

pub(super) fn command_string(p: &Program, c: &Command) -> String {
    match c {
        Command::Assign(x, e) => format!("{} := {}", p.vars[*x], expr_string(p, e)),
        Command::Assume(b) => format!("assume({})", expr_string(p, b)),
        Command::Create { func, prio, handle } => {
            format!("create({}, {}, {})", p.functions[*func].name, prio, p.vars[*handle])
        }
        Command::SetPriority { target, prio } => {
            format!("set_priority({}, {})", target_string(p, target), prio)
        }
        Command::Suspend(t) => format!("suspend({})", target_string(p, t)),
        Command::Resume(v) => format!("resume({})", p.vars[*v]),
        Command::Lock(l) => format!("lock({})", p.locks[*l].name),
        Command::Unlock(l) => format!("unlock({})", p.locks[*l].name),
        other => other.keyword().to_string(),
    }
}

pub(super) fn expr_string(p: &Program, e: &Expr) -> String {
    match e {
        Expr::Int(v) => v.to_string(),
        Expr::Bool(b) => b.to_string(),
        Expr::Var(v) => p.vars[*v].clone(),
        Expr::Unary(op, inner) => {
            let sym = match op {
                UnOp::Neg => "-",
                UnOp::Not => "!",
            };
            match inner.as_ref() {
                Expr::Binary(..) | Expr::Int(_) => format!("{sym}({})", expr_string(p, inner)),
                _ => format!("{sym}{}", expr_string(p, inner)),
            }
        }
        Expr::Binary(op, a, b) => {
            let side = |x: &Expr| match x {
                Expr::Binary(..) => format!("({})", expr_string(p, x)),
                _ => expr_string(p, x),
            };
            format!("{} {} {}", side(a), op.symbol(), side(b))
        }
    }
}

/// Line-independent structure of a program: everything except source positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramShape {
    pub max_prio: u32,
    pub vars: Vec<String>,
    pub locks: Vec<LockDecl>,
    pub functions: Vec<FunctionShape>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionShape {
    pub name: String,
    pub kind: FuncKind,
    pub num_locs: usize,
    pub entry: Loc,
    pub exit: Loc,
    pub edges: Vec<(Loc, Command, Loc, Option<LoopId>)>,
}

pub fn shape_of(p: &Program) -> ProgramShape {
    ProgramShape {
        max_prio: p.max_prio,
        vars: p.vars.clone(),
        locks: p.locks.clone(),
        functions: p
            .functions
            .iter()
            .map(|f| FunctionShape {
                name: f.name.to_string(),
                kind: f.kind,
                num_locs: f.cfg.num_locs,
                entry: f.cfg.entry,
                exit: f.cfg.exit,
                edges: f
                    .cfg
                    .instrs
                    .iter()
                    .map(|i| (i.from, i.cmd.clone(), i.to, i.loop_entry))
                    .collect(),
            })
            .collect(),
    }
}
