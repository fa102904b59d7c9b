use std::collections::HashSet;
use std::sync::Arc;

use super::lexer::{lex, Tok, Token};
use super::lower::lower_function;
use super::*;

const KEYWORDS: &[&str] = &[
    "skip", "assume", "create", "set_priority", "suspend", "resume", "suspendsched",
    "resumesched", "disableint", "enableint", "lock", "unlock", "block", "start", "if", "else",
    "while", "for", "NULL", "true", "false", "task", "isr", "main", "maxprio", "mutex", "var",
];

/// Parse IDA source text into a lowered [`Program`].
pub fn parse(src: &str) -> Result<Program, FrontendError> {
    let tokens = lex(src)?;
    let func_names = prescan_functions(&tokens)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        vars: Vec::new(),
        locks: Vec::new(),
        func_names,
        var_sites: Vec::new(),
    };
    p.program()
}

struct RawFunction {
    name: String,
    kind: FuncKind,
    body: Vec<Stmt>,
    line: u32,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    vars: Vec<String>,
    locks: Vec<LockDecl>,
    func_names: Vec<String>,
    /// First use of each variable, for clash diagnostics.
    var_sites: Vec<(u32, u32)>,
}

fn prescan_functions(tokens: &[Token]) -> Result<Vec<String>, FrontendError> {
    let mut names: Vec<String> = Vec::new();
    let mut depth = 0i32;
    for (i, t) in tokens.iter().enumerate() {
        match &t.tok {
            Tok::Punct("{") => depth += 1,
            Tok::Punct("}") => depth -= 1,
            Tok::Ident(kw) if depth == 0 => {
                let name = match kw.as_str() {
                    "main" => Some("main".to_string()),
                    "task" | "isr" => match tokens.get(i + 1).map(|t| &t.tok) {
                        Some(Tok::Ident(n)) => Some(n.clone()),
                        _ => None,
                    },
                    _ => None,
                };
                if let Some(n) = name {
                    if names.contains(&n) {
                        return Err(FrontendError::DuplicateFunction { name: n, line: t.line });
                    }
                    names.push(n);
                }
            }
            _ => {}
        }
    }
    Ok(names)
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, FrontendError> {
        let t = self.peek();
        Err(FrontendError::Syntax { line: t.line, col: t.col, msg: msg.into() })
    }

    fn at_punct(&self, p: &str) -> bool {
        matches!(&self.peek().tok, Tok::Punct(q) if *q == p)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn expect_punct(&mut self, p: &str) -> Result<Token, FrontendError> {
        if self.at_punct(p) {
            Ok(self.bump())
        } else {
            self.err(format!("expected `{p}`, found {}", describe(&self.peek().tok)))
        }
    }

    fn ident(&mut self) -> Result<(String, u32, u32), FrontendError> {
        match &self.peek().tok {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let t = self.bump();
                let Tok::Ident(s) = t.tok else { unreachable!() };
                Ok((s, t.line, t.col))
            }
            other => self.err(format!("expected identifier, found {}", describe(other))),
        }
    }

    fn int(&mut self) -> Result<i64, FrontendError> {
        match self.peek().tok {
            Tok::Int(v) => {
                self.bump();
                Ok(v)
            }
            _ => self.err(format!("expected integer, found {}", describe(&self.peek().tok))),
        }
    }

    fn prio_literal(&mut self) -> Result<u32, FrontendError> {
        let v = self.int()?;
        u32::try_from(v).or_else(|_| self.err("priority literal out of range"))
    }

    fn var(&mut self, name: String, line: u32, col: u32) -> Result<VarId, FrontendError> {
        if self.func_names.contains(&name) || self.locks.iter().any(|l| l.name == name) {
            return Err(FrontendError::KindClash { name, line, col });
        }
        Ok(match self.vars.iter().position(|v| *v == name) {
            Some(i) => i,
            None => {
                self.vars.push(name);
                self.var_sites.push((line, col));
                self.vars.len() - 1
            }
        })
    }

    fn lock(&mut self, name: String, line: u32, col: u32, kind: Option<LockKind>) -> Result<LockId, FrontendError> {
        if self.func_names.contains(&name) || self.vars.contains(&name) {
            return Err(FrontendError::KindClash { name, line, col });
        }
        Ok(match self.locks.iter().position(|l| l.name == name) {
            Some(i) => {
                if let Some(k) = kind {
                    self.locks[i].kind = k;
                }
                i
            }
            None => {
                self.locks.push(LockDecl { name, kind: kind.unwrap_or(LockKind::Plain) });
                self.locks.len() - 1
            }
        })
    }

    fn program(&mut self) -> Result<Program, FrontendError> {
        let mut max_prio = DEFAULT_MAX_PRIO;
        if self.at_kw("maxprio") {
            self.bump();
            max_prio = self.prio_literal()?;
            if max_prio == 0 {
                return self.err("maxprio must be at least 1");
            }
            self.expect_punct(";")?;
        }
        let mut raw = Vec::new();
        let mut seen = HashSet::new();
        loop {
            let t = self.peek().clone();
            match &t.tok {
                Tok::Eof => break,
                Tok::Ident(kw) if kw == "mutex" || kw == "lock" || kw == "var" => {
                    let kw = kw.clone();
                    self.bump();
                    loop {
                        let (name, line, col) = self.ident()?;
                        match kw.as_str() {
                            "var" => {
                                self.var(name, line, col)?;
                            }
                            "mutex" => {
                                self.lock(name, line, col, Some(LockKind::Mutex))?;
                            }
                            _ => {
                                self.lock(name, line, col, Some(LockKind::Plain))?;
                            }
                        }
                        if self.at_punct(",") {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    self.expect_punct(";")?;
                }
                Tok::Ident(kw) if kw == "main" || kw == "task" || kw == "isr" => {
                    let kind = match kw.as_str() {
                        "main" => FuncKind::Main,
                        "task" => FuncKind::Task,
                        _ => FuncKind::Isr,
                    };
                    self.bump();
                    let name = if kind == FuncKind::Main {
                        "main".to_string()
                    } else {
                        self.ident()?.0
                    };
                    if !seen.insert(name.clone()) {
                        return Err(FrontendError::DuplicateFunction { name, line: t.line });
                    }
                    let body = self.block()?;
                    raw.push(RawFunction { name, kind, body, line: t.line });
                }
                other => {
                    return self.err(format!(
                        "expected `main`, `task`, `isr` or a declaration, found {}",
                        describe(other)
                    ))
                }
            }
        }
        let main = raw
            .iter()
            .position(|f| f.kind == FuncKind::Main)
            .ok_or(FrontendError::MissingMain)?;
        // A name first used as a variable and later declared as a lock.
        for (i, v) in self.vars.iter().enumerate() {
            if self.locks.iter().any(|l| l.name == *v) {
                let (line, col) = self.var_sites[i];
                return Err(FrontendError::KindClash { name: v.clone(), line, col });
            }
        }
        let functions = raw
            .into_iter()
            .enumerate()
            .map(|(id, f)| {
                let name: Arc<str> = Arc::from(f.name.as_str());
                let cfg = lower_function(id, &name, &f.body);
                Function { name, kind: f.kind, body: f.body, cfg, line: f.line }
            })
            .collect();
        Ok(Program {
            max_prio,
            vars: std::mem::take(&mut self.vars),
            locks: std::mem::take(&mut self.locks),
            functions,
            main,
        })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, FrontendError> {
        self.expect_punct("{")?;
        let mut out = Vec::new();
        while !self.at_punct("}") {
            if matches!(self.peek().tok, Tok::Eof) {
                return self.err("unexpected end of input, expected `}`");
            }
            out.push(self.stmt()?);
        }
        self.bump();
        Ok(out)
    }

    fn target(&mut self) -> Result<Target, FrontendError> {
        if self.at_kw("NULL") {
            self.bump();
            Ok(Target::Current)
        } else {
            let (n, l, c) = self.ident()?;
            Ok(Target::Handle(self.var(n, l, c)?))
        }
    }

    fn stmt(&mut self) -> Result<Stmt, FrontendError> {
        let t = self.peek().clone();
        let line = t.line;
        let kw = match &t.tok {
            Tok::Ident(s) => s.clone(),
            other => return self.err(format!("expected statement, found {}", describe(other))),
        };
        match kw.as_str() {
            "if" => {
                self.bump();
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                let then_body = self.block()?;
                let else_body = if self.at_kw("else") {
                    self.bump();
                    if self.at_kw("if") {
                        Some(vec![self.stmt()?])
                    } else {
                        Some(self.block()?)
                    }
                } else {
                    None
                };
                return Ok(Stmt::If { cond, then_body, else_body, line });
            }
            "while" => {
                self.bump();
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                let body = self.block()?;
                return Ok(Stmt::While { cond, body, line });
            }
            "for" => {
                self.bump();
                self.expect_punct("(")?;
                self.expect_punct(";")?;
                self.expect_punct(";")?;
                self.expect_punct(")")?;
                let body = self.block()?;
                return Ok(Stmt::Forever { body, line });
            }
            _ => {}
        }
        let cmd = match kw.as_str() {
            "skip" | "suspendsched" | "resumesched" | "disableint" | "enableint" | "block"
            | "start" => {
                self.bump();
                match kw.as_str() {
                    "skip" => Command::Skip,
                    "suspendsched" => Command::SuspendSched,
                    "resumesched" => Command::ResumeSched,
                    "disableint" => Command::DisableInt,
                    "enableint" => Command::EnableInt,
                    "block" => Command::Block,
                    _ => Command::Start,
                }
            }
            "assume" => {
                self.bump();
                self.expect_punct("(")?;
                let b = self.expr()?;
                self.expect_punct(")")?;
                Command::Assume(b)
            }
            "create" => {
                self.bump();
                self.expect_punct("(")?;
                let (fname, fl, fc) = self.ident()?;
                let func = self.func_names.iter().position(|n| *n == fname).ok_or(
                    FrontendError::UnknownIdentifier { name: fname.clone(), line: fl, col: fc },
                )?;
                self.expect_punct(",")?;
                let prio = self.prio_literal()?;
                self.expect_punct(",")?;
                let (h, hl, hc) = self.ident()?;
                let handle = self.var(h, hl, hc)?;
                self.expect_punct(")")?;
                Command::Create { func, prio, handle }
            }
            "set_priority" => {
                self.bump();
                self.expect_punct("(")?;
                let target = self.target()?;
                self.expect_punct(",")?;
                let prio = self.prio_literal()?;
                self.expect_punct(")")?;
                Command::SetPriority { target, prio }
            }
            "suspend" => {
                self.bump();
                self.expect_punct("(")?;
                let target = self.target()?;
                self.expect_punct(")")?;
                Command::Suspend(target)
            }
            "resume" => {
                self.bump();
                self.expect_punct("(")?;
                let (h, hl, hc) = self.ident()?;
                let v = self.var(h, hl, hc)?;
                self.expect_punct(")")?;
                Command::Resume(v)
            }
            "lock" | "unlock" => {
                self.bump();
                self.expect_punct("(")?;
                let (n, l, c) = self.ident()?;
                let id = self.lock(n, l, c, None)?;
                self.expect_punct(")")?;
                if kw == "lock" {
                    Command::Lock(id)
                } else {
                    Command::Unlock(id)
                }
            }
            k if KEYWORDS.contains(&k) => {
                return self.err(format!("unexpected keyword `{k}`"));
            }
            _ => {
                let (n, l, c) = self.ident()?;
                let x = self.var(n, l, c)?;
                self.expect_punct(":=")?;
                let e = self.expr()?;
                Command::Assign(x, e)
            }
        };
        self.expect_punct(";")?;
        Ok(Stmt::Simple { cmd, line })
    }

    fn expr(&mut self) -> Result<Expr, FrontendError> {
        self.binary(0)
    }

    fn binary(&mut self, level: usize) -> Result<Expr, FrontendError> {
        const LEVELS: &[&[(&str, BinOp)]] = &[
            &[("||", BinOp::Or)],
            &[("&&", BinOp::And)],
            &[
                ("==", BinOp::Eq),
                ("!=", BinOp::Ne),
                ("<=", BinOp::Le),
                (">=", BinOp::Ge),
                ("<", BinOp::Lt),
                (">", BinOp::Gt),
            ],
            &[("+", BinOp::Add), ("-", BinOp::Sub)],
            &[("*", BinOp::Mul), ("/", BinOp::Div), ("%", BinOp::Mod)],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        'outer: loop {
            for (sym, op) in LEVELS[level] {
                if self.at_punct(sym) {
                    self.bump();
                    let rhs = self.binary(level + 1)?;
                    lhs = Expr::Binary(*op, Box::new(lhs), Box::new(rhs));
                    continue 'outer;
                }
            }
            return Ok(lhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, FrontendError> {
        if self.at_punct("-") {
            self.bump();
            // Fold `-<literal>` so negative constants print and reparse identically.
            if let Tok::Int(v) = self.peek().tok {
                self.bump();
                return Ok(Expr::Int(-v));
            }
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)));
        }
        if self.at_punct("!") {
            self.bump();
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)));
        }
        let t = self.peek().clone();
        match &t.tok {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(*v))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Expr::Bool(s == "true"))
            }
            Tok::Ident(_) => {
                let (n, l, c) = self.ident()?;
                Ok(Expr::Var(self.var(n, l, c)?))
            }
            other => self.err(format!("expected expression, found {}", describe(other))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(v) => format!("`{v}`"),
        Tok::Punct(p) => format!("`{p}`"),
        Tok::Eof => "end of input".into(),
    }
}
