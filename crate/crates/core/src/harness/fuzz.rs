use std::collections::BTreeMap;
use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::audit::{audit_program, Violation};
use crate::config::DetectorConfig;
use crate::detector::Rule;
use crate::frontend::{parse, validate};
use crate::semantics::Bounds;

/// Shape limits for generated programs.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FuzzConfig {
    pub max_tasks: usize,
    pub max_isrs: usize,
    /// Commands per function body.
    pub max_stmts: usize,
    pub max_prio: u32,
    pub suspend_resume: bool,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig { max_tasks: 3, max_isrs: 1, max_stmts: 6, max_prio: 3, suspend_resume: true }
    }
}

const ACCESSES: [&str; 6] = ["x := x + 1;", "y := x;", "x := y;", "x := 2;", "y := y + 1;", "z := x + y;"];

fn access(rng: &mut ChaCha8Rng) -> String {
    ACCESSES.choose(rng).unwrap().to_string()
}

/// Body items as lists of lines; each item costs its number of commands.
fn task_item(rng: &mut ChaCha8Rng, tasks: usize, mp: u32, fc: &FuzzConfig) -> Vec<String> {
    let handle = |rng: &mut ChaCha8Rng| format!("h{}", rng.gen_range(0..tasks));
    loop {
        let item = match rng.gen_range(0..16) {
            0..=3 => vec![access(rng)],
            4 => vec!["f := 1;".into(), access(rng), "f := 0;".into()],
            5 => vec!["if (f == 0) {".into(), access(rng), "}".into()],
            6 => vec!["lock(m);".into(), access(rng), "unlock(m);".into()],
            7 if fc.suspend_resume => {
                let h = handle(rng);
                vec![format!("suspend({h});"), access(rng), format!("resume({h});")]
            }
            8 if fc.suspend_resume => vec![format!("resume({});", handle(rng))],
            9 => vec![format!("set_priority(NULL, {});", rng.gen_range(1..=mp))],
            10 => vec![format!("set_priority({}, {});", handle(rng), rng.gen_range(1..=mp))],
            11 => vec!["disableint;".into(), access(rng), "enableint;".into()],
            12 => vec!["suspendsched;".into(), access(rng), "resumesched;".into()],
            13 => vec!["block;".into()],
            14 if fc.suspend_resume => vec!["suspend(NULL);".into()],
            15 => vec!["f := 0;".into()],
            _ => continue,
        };
        return item;
    }
}

fn isr_item(rng: &mut ChaCha8Rng) -> Vec<String> {
    match rng.gen_range(0..5) {
        0..=2 => vec![access(rng)],
        3 => vec!["disableint;".into(), access(rng), "enableint;".into()],
        _ => vec!["f := 0;".into()],
    }
}

fn body(rng: &mut ChaCha8Rng, budget: usize, mut item: impl FnMut(&mut ChaCha8Rng) -> Vec<String>) -> Vec<String> {
    let mut lines = Vec::new();
    let mut used = 0;
    let target = rng.gen_range(1..=budget);
    while used < target {
        let it = item(rng);
        let cost = it.iter().filter(|l| *l != "}").count();
        if used + cost > budget {
            if used == 0 {
                continue;
            }
            break;
        }
        used += cost;
        lines.extend(it);
    }
    lines
}

/// The `index`-th program of the stream for `seed`.
pub fn generate(seed: u64, index: u64, fc: &FuzzConfig) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let tasks = rng.gen_range(1..=fc.max_tasks.max(1));
    let isrs = rng.gen_range(0..=fc.max_isrs);
    let mp = fc.max_prio.max(1);
    let mut out = String::new();
    writeln!(out, "maxprio {mp};").unwrap();
    writeln!(out, "mutex m;").unwrap();
    out.push_str("main {\n");
    if rng.gen_bool(0.5) {
        writeln!(out, "  {}", access(&mut rng)).unwrap();
    }
    for t in 0..tasks {
        writeln!(out, "  create(t{t}, {}, h{t});", rng.gen_range(1..=mp)).unwrap();
    }
    out.push_str("  start;\n");
    if rng.gen_bool(0.3) {
        writeln!(out, "  {}", access(&mut rng)).unwrap();
    }
    out.push_str("}\n");
    for t in 0..tasks {
        writeln!(out, "task t{t} {{").unwrap();
        let lines = body(&mut rng, fc.max_stmts, |r| task_item(r, tasks, mp, fc));
        let looped = rng.gen_bool(0.6);
        let pad = if looped { "    " } else { "  " };
        if looped {
            out.push_str("  for (;;) {\n");
        }
        for l in lines {
            writeln!(out, "{pad}{l}").unwrap();
        }
        if looped {
            out.push_str("  }\n");
        }
        out.push_str("}\n");
    }
    for i in 0..isrs {
        writeln!(out, "isr i{i} {{").unwrap();
        for l in body(&mut rng, fc.max_stmts.min(3), isr_item) {
            writeln!(out, "  {l}").unwrap();
        }
        out.push_str("}\n");
    }
    out
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Counterexample {
    pub index: u64,
    pub source: String,
    pub violation: Violation,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FuzzReport {
    pub seed: u64,
    pub programs: u64,
    pub pairs: usize,
    /// Eliminated directions checked against the oracle, by rule.
    pub eliminated: BTreeMap<Rule, usize>,
    pub bounded_programs: usize,
    pub counterexamples: Vec<Counterexample>,
}

impl FuzzReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "seed {}  programs {}  pairs {}", self.seed, self.programs, self.pairs).unwrap();
        let rules: Vec<String> = self.eliminated.iter().map(|(r, n)| format!("{r}={n}")).collect();
        writeln!(out, "eliminated directions: {}", rules.join(" ")).unwrap();
        writeln!(out, "counterexamples: {}", self.counterexamples.len()).unwrap();
        for c in &self.counterexamples {
            let v = &c.violation;
            let rule = v.rule.map_or("non-racy".to_string(), |r| r.to_string());
            writeln!(out, "--- program {} ({rule}: {} / {})\n{}", c.index, v.s1, v.s2, c.source).unwrap();
        }
        out
    }
}

/// Generate `n` programs and check every eliminated direction and non-racy
/// pair against the oracle.
pub fn fuzz_soundness(seed: u64, n: u64, fc: &FuzzConfig, cfg: DetectorConfig, bounds: Bounds) -> FuzzReport {
    let runs: Vec<_> = (0..n)
        .into_par_iter()
        .map(|i| {
            let src = generate(seed, i, fc);
            let p = parse(&src).unwrap_or_else(|e| panic!("generated program does not parse: {e}\n{src}"));
            debug_assert!(validate(&p).is_empty(), "{src}");
            (i, src.clone(), audit_program(&format!("fuzz-{i}"), &p, cfg, bounds))
        })
        .collect();
    let mut report = FuzzReport {
        seed,
        programs: n,
        pairs: 0,
        eliminated: BTreeMap::new(),
        bounded_programs: 0,
        counterexamples: Vec::new(),
    };
    for (i, src, a) in runs {
        report.pairs += a.report.pairs.len();
        report.bounded_programs += a.caps_hit.state_cap as usize;
        for (r, k) in a.eliminated {
            *report.eliminated.entry(r).or_insert(0) += k;
        }
        for v in a.violations {
            report.counterexamples.push(Counterexample { index: i, source: src.clone(), violation: v });
        }
    }
    report
}
