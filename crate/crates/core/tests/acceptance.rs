//! Acceptance criteria 1-7. Each prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use idaracer::analyses::{analyze, Interval, NotionalLock};
use idaracer::detector::{detect_races, detect_with_facts, Rule, Verdict, RULE_ORDER};
use idaracer::harness::{audit_program, fuzz_soundness, run_corpus, FuzzConfig};
use idaracer::semantics::{explore, mhp, oib, oib_all, Bounds, Machine, State, Status};
use idaracer::{parse, validate, DetectorConfig, MutexMode, Program, StmtId};

const FACTS_LIMIT: Duration = Duration::from_secs(1);
const VERDICTS_LIMIT: Duration = Duration::from_secs(10);
const SOUNDNESS_LIMIT: Duration = Duration::from_secs(300);
const STATIC_LIMIT: Duration = Duration::from_millis(1500);
const MIN_CORPUS: usize = 10;
const FUZZ_PROGRAMS: u64 = 500;
const FUZZ_SEED: u64 = 2024;
const MIN_PROP1_PAIRS: usize = 200;

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn corpus() -> Vec<(String, Program)> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "ida"))
        .collect();
    files.sort();
    files.iter().map(|f| (stem(f), load(f))).collect()
}

fn stem(f: &Path) -> String {
    f.file_stem().unwrap().to_string_lossy().into_owned()
}

fn load(f: &Path) -> Program {
    let p = parse(&std::fs::read_to_string(f).unwrap()).unwrap();
    assert!(validate(&p).is_empty(), "{}", f.display());
    p
}

fn program(name: &str) -> Program {
    load(&corpus_dir().join(format!("{name}.ida")))
}

fn stmt(p: &Program, s: &str) -> StmtId {
    p.resolve_stmt(s).unwrap()
}

struct Check {
    pass: bool,
    detail: String,
}

impl Check {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Check { pass, detail: detail.into() }
    }
}

fn sample(items: &[String]) -> String {
    if items.is_empty() {
        String::new()
    } else {
        format!(": {}", items.iter().take(5).cloned().collect::<Vec<_>>().join("; "))
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Check) -> Check {
    let t = Instant::now();
    let mut c = f();
    let el = t.elapsed();
    if el >= limit {
        c.pass = false;
    }
    c.detail = format!("{}; {:.2}s (limit {:.1}s)", c.detail, el.as_secs_f64(), limit.as_secs_f64());
    c
}

fn prodcons_facts() -> Check {
    timed(FACTS_LIMIT, || {
        let p = program("prodcons");
        let f = analyze(&p, &DetectorConfig::default());
        let cons = p.function("cons").unwrap();
        let mut bad = Vec::new();
        let expect_prio = [
            ("prod:11", (1, 1)),
            ("prod:12", (1, 1)),
            ("prod:13", (1, 1)),
            ("prod:14", (1, 1)),
            ("cons:21", (1, 1)),
            ("cons:22", (1, 1)),
            ("cons:23", (2, 2)),
            ("cons:24", (2, 2)),
            ("cons:20", (1, 1)),
        ];
        for (s, (lo, hi)) in expect_prio {
            let got = f.prio_at(&p, &stmt(&p, s));
            if got != Some(Interval { lo, hi }) {
                bad.push(format!("prio {s} = {got:?}"));
            }
        }
        for s in ["prod:11", "prod:12", "prod:13", "prod:14", "cons:21", "cons:22", "cons:23", "cons:24"] {
            let got = f.suspended_at(&p, &stmt(&p, s));
            let want = if ["prod:12", "prod:13", "prod:14"].contains(&s) { vec![cons] } else { vec![] };
            if got != want {
                bad.push(format!("susp {s} = {got:?}"));
            }
        }
        Check::new(bad.is_empty(), if bad.is_empty() { "Prio and Susp columns match".into() } else { bad.join(", ") })
    })
}

fn prodcons_verdicts() -> Check {
    timed(VERDICTS_LIMIT, || {
        let p = program("prodcons");
        let cfg = DetectorConfig::default();
        let b = Bounds { loop_bound: 2, ..Bounds::default() };
        let vs = detect_races(&p, cfg);
        let find = |a: &str, c: &str| {
            let (a, c) = (stmt(&p, a), stmt(&p, c));
            vs.iter().find(|v| v.pair.s1 == a && v.pair.s2 == c).cloned()
        };
        let count = find("prod:13", "cons:23");
        let item = find("prod:12", "cons:21");
        let count_ok = count.as_ref().is_some_and(|v| {
            v.verdict == Verdict::NonRacy && v.rules == [Some(Rule::C1), Some(Rule::C2)]
        });
        let item_ok = item.as_ref().is_some_and(|v| v.verdict == Verdict::PotentiallyRacy);
        let (i1, i2) = (stmt(&p, "cons:21"), stmt(&p, "prod:12"));
        let (c1, c2) = (stmt(&p, "prod:13"), stmt(&p, "cons:23"));
        let item_witness = oib(&p, cfg, b, &i1, &i2).unwrap().holds;
        let count_witness = oib(&p, cfg, b, &c1, &c2).unwrap().holds || oib(&p, cfg, b, &c2, &c1).unwrap().holds;
        Check::new(
            count_ok && item_ok && item_witness && !count_witness,
            format!(
                "count pair non-racy by [C1, C2]: {count_ok}; item pair potentially racy: {item_ok}; \
                 item witness: {item_witness}; count witness: {count_witness}"
            ),
        )
    })
}

fn elimination_soundness() -> Check {
    timed(SOUNDNESS_LIMIT, || {
        let cfg = DetectorConfig::default();
        let b = Bounds::default();
        let run = run_corpus(&corpus_dir(), cfg, b).unwrap();
        let mut rules: BTreeMap<Rule, usize> = BTreeMap::new();
        for r in &run.results {
            for (rule, n) in &r.audit.eliminated {
                *rules.entry(*rule).or_default() += n;
            }
        }
        let fuzz = fuzz_soundness(FUZZ_SEED, FUZZ_PROGRAMS, &FuzzConfig::default(), cfg, b);
        let violations = run.violations() + fuzz.counterexamples.len();
        let all_rules = RULE_ORDER.iter().all(|r| rules.contains_key(r));
        Check::new(
            run.results.len() >= MIN_CORPUS && all_rules && violations == 0,
            format!(
                "{} corpus programs, rules exercised {:?}, {} fuzzed programs with {} pairs, {violations} violations",
                run.results.len(),
                rules.keys().collect::<Vec<_>>(),
                fuzz.programs,
                fuzz.pairs
            ),
        )
    })
}

fn mhp_equivalence() -> Check {
    let cfg = DetectorConfig::default();
    let b = Bounds::default();
    let mut pairs = 0;
    let mut mismatches = Vec::new();
    for (name, p) in corpus() {
        let access: Vec<StmtId> =
            p.statements().into_iter().filter(|(_, c)| c.is_access()).map(|(s, _)| s).collect();
        let oibs: Vec<BTreeSet<StmtId>> =
            access.iter().map(|s| oib_all(&p, cfg, b, s).unwrap().witnesses.into_keys().collect()).collect();
        for i in 0..access.len() {
            for j in i + 1..access.len() {
                let (s1, s2) = (&access[i], &access[j]);
                let m = mhp(&p, cfg, b, s1, s2).unwrap().holds;
                let o = oibs[i].contains(s2) || oibs[j].contains(s1);
                pairs += 1;
                if m != o {
                    mismatches.push(format!("{name} {s1}/{s2} mhp={m} oib={o}"));
                }
            }
        }
    }
    Check::new(
        pairs >= MIN_PROP1_PAIRS && mismatches.is_empty(),
        format!("{pairs} pairs, {} mismatches{}", mismatches.len(), sample(&mismatches)),
    )
}

/// Whether the lock's meaning holds for thread `t` in `s`. Flag checks and
/// flags or suspensions another function may undo are not state properties.
fn lock_holds(p: &Program, f: &idaracer::analyses::AnalysisFacts, s: &State, t: usize, l: &NotionalLock) -> Option<bool> {
    let me = s.threads[t].func;
    Some(match *l {
        NotionalLock::Real(k) => s.owner[k] == Some(t as u32),
        NotionalLock::IntOff => s.ints_disabled,
        NotionalLock::SchedOff => s.sched_suspended,
        NotionalLock::SuspBlock(g) => {
            if f.lists.reslist[g].iter().any(|&r| r != me) {
                return None;
            }
            s.threads.iter().filter(|th| th.func == g).all(|th| th.status == Status::Suspended)
        }
        NotionalLock::FlagSet(x) => {
            let others_write = p.functions.iter().enumerate().any(|(g, fun)| {
                g != me && fun.cfg.instrs.iter().any(|i| i.cmd.accesses().1 == Some(x))
            });
            if others_write {
                return None;
            }
            s.env[x] == 1
        }
        NotionalLock::FlagChk(_) => return None,
    })
}

fn fact_soundness() -> Check {
    let b = Bounds::default();
    let mut states = 0;
    let mut checked = 0;
    let mut bad = Vec::new();
    for (name, p) in corpus() {
        for mode in [MutexMode::Plain, MutexMode::Inheritance, MutexMode::Ceiling] {
            let cfg = DetectorConfig { mutex_mode: mode, ..DetectorConfig::default() };
            let f = analyze(&p, &cfg);
            let ex = explore(&Machine::new(&p, cfg, b));
            states += ex.len();
            for s in &ex.states {
                for (t, th) in s.threads.iter().enumerate() {
                    let cfgf = &p.functions[th.func].cfg;
                    if cfgf.outgoing(th.pc).is_empty() {
                        continue;
                    }
                    checked += 1;
                    match f.prio[th.func][th.pc] {
                        Some(iv) if iv.contains(th.prio) => {}
                        iv => bad.push(format!("{name}/{mode:?} thread {t} at {}:{} prio {} not in {iv:?}", p.functions[th.func].name, th.pc, th.prio)),
                    }
                    for l in f.locks[th.func][th.pc].iter().flatten() {
                        if lock_holds(&p, &f, s, t, l) == Some(false) {
                            bad.push(format!("{name}/{mode:?} thread {t} at {}:{} {}", p.functions[th.func].name, th.pc, l.describe(&p)));
                        }
                    }
                }
            }
        }
    }
    bad.sort();
    bad.dedup();
    Check::new(
        bad.is_empty(),
        format!("{states} states, {checked} thread positions, {} violations{}", bad.len(), sample(&bad)),
    )
}

fn table_conventions() -> Check {
    let b = Bounds::default();
    let nxt = DetectorConfig { mutex_mode: MutexMode::Ceiling, round_robin: false };
    let ping = audit_program("pingpong", &program("pingpong"), nxt, b).report.metrics;
    let counter = audit_program("counter", &program("counter"), DetectorConfig::default(), b).report.metrics;
    let empty = audit_program("blinker", &program("blinker"), DetectorConfig::default(), b).report.metrics;
    let ok = ping.potential == 0
        && counter.conflicting > 0
        && counter.elim_pct == 0.0
        && empty.conflicting == 0
        && empty.elim_pct == 0.0
        && empty.precision_pct == Some(100.0);
    Check::new(
        ok,
        format!(
            "pingpong potential {}; counter %Elim {:.2}; zero-conflict %Elim {:.2} %Prec {:?}",
            ping.potential, counter.elim_pct, empty.elim_pct, empty.precision_pct
        ),
    )
}

fn performance() -> Check {
    let cfg = DetectorConfig::default();
    let mut slowest = (String::new(), Duration::ZERO);
    for f in std::fs::read_dir(corpus_dir()).unwrap().map(|e| e.unwrap().path()) {
        if f.extension().is_none_or(|e| e != "ida") {
            continue;
        }
        let src = std::fs::read_to_string(&f).unwrap();
        let t = Instant::now();
        let p = parse(&src).unwrap();
        let facts = analyze(&p, &cfg);
        let vs = detect_with_facts(&p, &facts, cfg);
        std::hint::black_box(vs);
        let el = t.elapsed();
        if el > slowest.1 {
            slowest = (stem(&f), el);
        }
    }
    let run = run_corpus(&corpus_dir(), cfg, Bounds::default()).unwrap();
    let prec = run.totals().precision_pct.unwrap_or(100.0);
    Check::new(
        slowest.1 < STATIC_LIMIT,
        format!(
            "slowest static analysis {} at {:.4}s (limit {:.1}s); overall %Prec {prec:.2}",
            slowest.0,
            slowest.1.as_secs_f64(),
            STATIC_LIMIT.as_secs_f64()
        ),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Check);
    let criteria: [Criterion; 7] = [
        ("priority and suspension facts on producer/consumer", prodcons_facts),
        ("producer/consumer verdicts and witnesses", prodcons_verdicts),
        ("no eliminated direction has an oracle witness", elimination_soundness),
        ("mhp iff occurs-in-between in either direction", mhp_equivalence),
        ("analysis facts hold on every explored state", fact_soundness),
        ("metric conventions on pingpong, counter, zero-conflict", table_conventions),
        ("static analysis time per program", performance),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let c = run();
        failed += !c.pass as usize;
        println!("criterion {}: {} {name}: {}", i + 1, if c.pass { "PASS" } else { "FAIL" }, c.detail);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
