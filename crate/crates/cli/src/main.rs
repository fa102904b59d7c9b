use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use idaracer::analyses::analyze;
use idaracer::detector::{detect_with_facts, Report, Verdict};
use idaracer::harness::{fuzz_soundness, run_corpus, FuzzConfig};
use idaracer::semantics::{self, Bounds, Machine, OracleResult};
use idaracer::{parse, validate, DetectorConfig, MutexMode, Program, StmtId};

#[derive(Parser)]
#[command(name = "idaracer", version, about = "Race detection for interrupt-driven RTOS programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Report conflicting accesses and race verdicts.
    Analyze {
        file: PathBuf,
        #[command(flatten)]
        opts: Opts,
        /// Print the analysis facts alongside the report.
        #[arg(long)]
        dump_facts: bool,
    },
    /// Explore the reachable state space.
    Explore {
        file: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Search for an execution where S2 runs in between S1.
    CheckOib {
        file: PathBuf,
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        opts: Opts,
    },
    /// Search for an execution where S1 and S2 happen in parallel.
    Mhp {
        file: PathBuf,
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        opts: Opts,
    },
    /// Print priority intervals, held locks and suspended tasks per statement.
    Facts {
        file: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Audit every .ida file of a directory against the oracle.
    Corpus {
        dir: PathBuf,
        #[command(flatten)]
        opts: Opts,
        /// Also write the summary table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Audit randomly generated programs against the oracle.
    Fuzz {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, short, default_value_t = 100)]
        n: u64,
        #[arg(long, default_value_t = 3)]
        max_tasks: usize,
        #[arg(long, default_value_t = 1)]
        max_isrs: usize,
        #[arg(long, default_value_t = 6)]
        max_stmts: usize,
        /// Leave suspend/resume out of generated programs.
        #[arg(long)]
        no_suspend: bool,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Args)]
struct PairArgs {
    /// First statement, `func:line` or `func:line.sub`.
    #[arg(long)]
    s1: String,
    #[arg(long)]
    s2: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct Opts {
    #[arg(long, value_enum, default_value = "plain")]
    mutex: MutexArg,
    /// Disable time slicing between equal-priority tasks.
    #[arg(long)]
    no_round_robin: bool,
    #[arg(long, default_value_t = 2)]
    loop_bound: u32,
    #[arg(long, default_value_t = 2)]
    isr_bound: u32,
    #[arg(long, default_value_t = 10_000)]
    step_bound: u32,
    #[arg(long, default_value_t = 1_000_000)]
    state_cap: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Attach oracle witnesses.
    #[arg(long)]
    trace: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum MutexArg {
    Plain,
    Inheritance,
    Ceiling,
}

impl Opts {
    fn config(&self) -> DetectorConfig {
        let mutex_mode = match self.mutex {
            MutexArg::Plain => MutexMode::Plain,
            MutexArg::Inheritance => MutexMode::Inheritance,
            MutexArg::Ceiling => MutexMode::Ceiling,
        };
        DetectorConfig { mutex_mode, round_robin: !self.no_round_robin }
    }

    fn bounds(&self) -> Bounds {
        Bounds {
            loop_bound: self.loop_bound,
            isr_bound: self.isr_bound,
            step_bound: self.step_bound,
            state_cap: self.state_cap,
        }
    }

    fn json(&self) -> bool {
        matches!(self.format, Format::Json)
    }
}

/// Failure that maps to exit code 2.
struct UsageError(String);

type Outcome = Result<ExitCode, UsageError>;

fn color() -> bool {
    std::env::var("IDARACER_COLOR").map_or(true, |v| v != "0") && std::io::stdout().is_terminal()
}

fn load(path: &Path) -> Result<Program, UsageError> {
    let src = std::fs::read_to_string(path).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    let p = parse(&src).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    let diags = validate(&p);
    if !diags.is_empty() {
        let msgs: Vec<String> = diags.iter().map(|d| format!("{}: {}: {}", path.display(), d.stmt, d.message)).collect();
        return Err(UsageError(msgs.join("\n")));
    }
    Ok(p)
}

fn stmt(p: &Program, text: &str) -> Result<StmtId, UsageError> {
    let s = p.resolve_stmt(text).ok_or_else(|| UsageError(format!("no statement `{text}`")))?;
    if !p.instruction(&s).is_some_and(|i| i.cmd.is_access()) {
        return Err(UsageError(format!("`{text}` is not an assignment or assume")));
    }
    Ok(s)
}

fn program_name(path: &Path) -> String {
    path.file_name().map_or_else(String::new, |s| s.to_string_lossy().into_owned())
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn exit(flag: bool) -> ExitCode {
    ExitCode::from(flag as u8)
}

fn analyze_cmd(file: &Path, opts: &Opts, dump_facts: bool) -> Outcome {
    let p = load(file)?;
    let cfg = opts.config();
    let facts = analyze(&p, &cfg);
    let mut verdicts = detect_with_facts(&p, &facts, cfg);
    let mut confirmed = None;
    if opts.trace {
        let mut n = 0;
        for v in verdicts.iter_mut().filter(|v| v.verdict == Verdict::PotentiallyRacy) {
            let r = semantics::mhp(&p, cfg, opts.bounds(), &v.pair.s1, &v.pair.s2).expect("resolved statements");
            if r.witness.is_some() {
                n += 1;
            }
            v.witness = r.witness;
        }
        confirmed = Some(n);
    }
    let report = Report::new(program_name(file), cfg, verdicts, confirmed);
    if opts.json() {
        let mut v = serde_json::to_value(&report).expect("serializable");
        if dump_facts {
            v["facts"] = facts.to_json(&p);
        }
        print_json(&v);
    } else {
        print!("{}", report.to_text(color()));
        if dump_facts {
            print!("{}", facts_text(&p, &facts));
        }
    }
    Ok(exit(report.potential() > 0))
}

fn facts_text(p: &Program, facts: &idaracer::analyses::AnalysisFacts) -> String {
    let mut out = String::new();
    for (s, c) in p.statements() {
        let prio = facts.prio_at(p, &s).map_or("-".to_string(), |i| format!("{},{}", i.lo, i.hi));
        let locks: Vec<String> = facts.locks_at(p, &s).iter().map(|l| l.describe(p)).collect();
        out.push_str(&format!("{:<10} {:<28} {:<6} {}\n", s.to_string(), p.command_to_string(&c), prio, locks.join(" ")));
    }
    out
}

fn explore_cmd(file: &Path, opts: &Opts) -> Outcome {
    let p = load(file)?;
    let m = Machine::new(&p, opts.config(), opts.bounds());
    let ex = semantics::explore(&m);
    let errors: Vec<String> = ex.errors.iter().map(|(_, e)| e.clone()).collect();
    if opts.json() {
        print_json(&json!({
            "program": program_name(file),
            "states": ex.len(),
            "transitions": ex.transitions,
            "terminal": ex.terminal.len(),
            "errors": errors,
            "capsHit": ex.stats,
        }));
    } else {
        println!("states {}  transitions {}  terminal {}", ex.len(), ex.transitions, ex.terminal.len());
        let c = ex.stats;
        println!(
            "caps hit: state-cap {}  step-bound {}  loop-bound {}  isr-bound {}",
            c.state_cap, c.step_bound, c.loop_bound, c.isr_bound
        );
        for e in errors {
            println!("error: {e}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn oracle_cmd(file: &Path, pair: &PairArgs, opts: &Opts, mhp: bool) -> Outcome {
    let p = load(file)?;
    let (s1, s2) = (stmt(&p, &pair.s1)?, stmt(&p, &pair.s2)?);
    let query = if mhp { semantics::mhp } else { semantics::oib };
    let r: OracleResult = query(&p, opts.config(), opts.bounds(), &s1, &s2).expect("resolved statements");
    let what = if mhp { "happen in parallel" } else { "occurs in between" };
    if opts.json() {
        let mut v = json!({"s1": s1, "s2": s2, "holds": r.holds, "states": r.states, "capsHit": r.caps_hit});
        if opts.trace {
            v["witness"] = serde_json::to_value(&r.witness).expect("serializable");
        }
        print_json(&v);
    } else {
        let verdict = if r.holds { "yes" } else { "no (within bounds)" };
        println!("{s1} / {s2} {what}: {verdict}  [{} states]", r.states);
        if let (true, Some(w)) = (opts.trace, &r.witness) {
            for (i, st) in w.steps.iter().enumerate() {
                let mark = if i == w.pre_index {
                    "  <- enters block"
                } else if i == w.occurrence_index {
                    "  <- occurrence"
                } else {
                    ""
                };
                println!("{i:>4}. t{} {:<11} {}{mark}", st.thread, st.rule, st.stmt.as_deref().unwrap_or("-"));
            }
        }
    }
    Ok(exit(r.holds))
}

fn facts_cmd(file: &Path, opts: &Opts) -> Outcome {
    let p = load(file)?;
    let facts = analyze(&p, &opts.config());
    if opts.json() {
        print_json(&facts.to_json(&p));
    } else {
        print!("{}", facts_text(&p, &facts));
    }
    Ok(ExitCode::SUCCESS)
}

fn corpus_cmd(dir: &Path, opts: &Opts, csv: Option<&Path>) -> Outcome {
    let run = run_corpus(dir, opts.config(), opts.bounds()).map_err(|e| UsageError(e.to_string()))?;
    if let Some(path) = csv {
        std::fs::write(path, run.to_csv()).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    }
    if opts.json() {
        print_json(&run);
    } else {
        print!("{}", run.to_markdown());
        for r in &run.results {
            for v in &r.audit.violations {
                let rule = v.rule.map_or("non-racy".to_string(), |r| r.to_string());
                println!("VIOLATION {}: {rule} {} / {}", r.program, v.s1, v.s2);
            }
        }
    }
    Ok(exit(run.violations() > 0))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match &cli.cmd {
        Cmd::Analyze { file, opts, dump_facts } => analyze_cmd(file, opts, *dump_facts),
        Cmd::Explore { file, opts } => explore_cmd(file, opts),
        Cmd::CheckOib { file, pair, opts } => oracle_cmd(file, pair, opts, false),
        Cmd::Mhp { file, pair, opts } => oracle_cmd(file, pair, opts, true),
        Cmd::Facts { file, opts } => facts_cmd(file, opts),
        Cmd::Corpus { dir, opts, csv } => corpus_cmd(dir, opts, csv.as_deref()),
        Cmd::Fuzz { seed, n, max_tasks, max_isrs, max_stmts, no_suspend, opts } => {
            let fc = FuzzConfig {
                max_tasks: *max_tasks,
                max_isrs: *max_isrs,
                max_stmts: *max_stmts,
                suspend_resume: !no_suspend,
                ..FuzzConfig::default()
            };
            let rep = fuzz_soundness(*seed, *n, &fc, opts.config(), opts.bounds());
            if opts.json() {
                print_json(&rep);
            } else {
                print!("{}", rep.to_text());
            }
            Ok(exit(!rep.counterexamples.is_empty()))
        }
    };
    out.unwrap_or_else(|UsageError(msg)| {
        eprintln!("error: {msg}");
        ExitCode::from(2)
    })
}
