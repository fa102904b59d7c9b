//! Conflicting-pair enumeration and the cannot-occur-in-between rules.

mod pairs;
mod rules;

use std::fmt::Write;

use serde::Serialize;

use crate::analyses::{analyze, AnalysisFacts};
use crate::frontend::{Program, StmtId};
use crate::semantics::Witness;

pub use crate::config::{DetectorConfig, MutexMode};
pub use pairs::{conflicting_pairs, Access, ConflictPair};
pub use rules::{Rule, Rules, RULE_ORDER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    NonRacy,
    PotentiallyRacy,
}

#[derive(Debug, Clone, Serialize)]
pub struct RaceVerdict {
    #[serde(flatten)]
    pub pair: ConflictPair,
    pub verdict: Verdict,
    /// Eliminating rule for (s1, s2) and for (s2, s1).
    pub rules: [Option<Rule>; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

/// First rule showing `s2` cannot occur in between `s1`.
pub fn check_noib(p: &Program, facts: &AnalysisFacts, cfg: DetectorConfig, s1: &StmtId, s2: &StmtId) -> Option<Rule> {
    Rules::new(p, facts, cfg).check(s1, s2)
}

pub fn detect_races(p: &Program, cfg: DetectorConfig) -> Vec<RaceVerdict> {
    detect_with_facts(p, &analyze(p, &cfg), cfg)
}

pub fn detect_with_facts(p: &Program, facts: &AnalysisFacts, cfg: DetectorConfig) -> Vec<RaceVerdict> {
    let rules = Rules::new(p, facts, cfg);
    conflicting_pairs(p, &facts.multiplicity)
        .into_iter()
        .map(|pair| {
            let r = [rules.check(&pair.s1, &pair.s2), rules.check(&pair.s2, &pair.s1)];
            let verdict = if r.iter().all(Option::is_some) { Verdict::NonRacy } else { Verdict::PotentiallyRacy };
            RaceVerdict { pair, verdict, rules: r, witness: None }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Metrics {
    pub conflicting: usize,
    pub potential: usize,
    pub elim_pct: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision_pct: Option<f64>,
}

impl Metrics {
    /// `confirmed`: potentially-racy pairs the oracle showed racy, if run.
    pub fn new(conflicting: usize, potential: usize, confirmed: Option<usize>) -> Self {
        let elim_pct = if conflicting == 0 {
            0.0
        } else {
            100.0 * (conflicting - potential) as f64 / conflicting as f64
        };
        let precision_pct =
            confirmed.map(|c| if potential == 0 { 100.0 } else { 100.0 * c as f64 / potential as f64 });
        Metrics { conflicting, potential, elim_pct, precision_pct }
    }

    pub fn of(verdicts: &[RaceVerdict], confirmed: Option<usize>) -> Self {
        let potential = verdicts.iter().filter(|v| v.verdict == Verdict::PotentiallyRacy).count();
        Metrics::new(verdicts.len(), potential, confirmed)
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub program: String,
    pub config: DetectorConfig,
    pub pairs: Vec<RaceVerdict>,
    pub metrics: Metrics,
}

impl Report {
    pub fn new(program: String, config: DetectorConfig, pairs: Vec<RaceVerdict>, confirmed: Option<usize>) -> Self {
        let mut metrics = Metrics::of(&pairs, confirmed);
        metrics.elim_pct = round2(metrics.elim_pct);
        metrics.precision_pct = metrics.precision_pct.map(round2);
        Report { program, config, pairs, metrics }
    }

    pub fn potential(&self) -> usize {
        self.metrics.potential
    }

    pub fn to_text(&self, color: bool) -> String {
        let paint = |code: &str, s: &str| if color { format!("\x1b[{code}m{s}\x1b[0m") } else { s.to_string() };
        let mut out = String::new();
        writeln!(out, "{}", self.program).unwrap();
        for v in &self.pairs {
            let verdict = match v.verdict {
                Verdict::NonRacy => paint("32", "non-racy        "),
                Verdict::PotentiallyRacy => paint("31", "potentially-racy"),
            };
            let rule = |r: Option<Rule>| r.map_or("-".to_string(), |r| r.to_string());
            writeln!(
                out,
                "  {verdict}  {:<10} {:<12} {:<12} [{}, {}]",
                v.pair.var,
                v.pair.s1.to_string(),
                v.pair.s2.to_string(),
                rule(v.rules[0]),
                rule(v.rules[1])
            )
            .unwrap();
            if let Some(w) = &v.witness {
                for (i, st) in w.steps.iter().enumerate() {
                    let stmt = st.stmt.as_deref().unwrap_or("-");
                    writeln!(out, "      {i:>3}. t{} {:<11} {stmt}", st.thread, st.rule).unwrap();
                }
            }
        }
        let m = &self.metrics;
        write!(out, "conflicting {}  potential {}  %Elim {:.2}", m.conflicting, m.potential, m.elim_pct).unwrap();
        if let Some(pr) = m.precision_pct {
            write!(out, "  %Prec {pr:.2}").unwrap();
        }
        out.push('\n');
        out
    }
}
