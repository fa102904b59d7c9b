use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::analyses::analyze;
use crate::config::DetectorConfig;
use crate::detector::{detect_with_facts, RaceVerdict, Report, Rule, Verdict};
use crate::frontend::{Program, StmtId};
use crate::semantics::{self, Bounds, CapsHit, Witness};

/// An eliminated direction or non-racy pair the oracle contradicts.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Violation {
    pub s1: StmtId,
    pub s2: StmtId,
    /// `None` when a non-racy pair was shown to happen in parallel.
    pub rule: Option<Rule>,
    pub witness: Witness,
}

/// Detector verdicts for one program checked against the oracle.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Audit {
    pub report: Report,
    /// Potentially-racy pairs with an oracle witness.
    pub confirmed: usize,
    pub violations: Vec<Violation>,
    pub caps_hit: CapsHit,
    pub detector_millis: f64,
    pub oracle_millis: f64,
    /// Eliminated directions checked, by rule.
    pub eliminated: BTreeMap<Rule, usize>,
}

/// Run the detector, then the oracle: a witness for every potentially-racy
/// pair, and an occurs-in-between check for every eliminated direction.
pub fn audit_program(name: &str, p: &Program, cfg: DetectorConfig, bounds: Bounds) -> Audit {
    let t0 = Instant::now();
    let facts = analyze(p, &cfg);
    let mut verdicts: Vec<RaceVerdict> = detect_with_facts(p, &facts, cfg);
    let detector_millis = t0.elapsed().as_secs_f64() * 1e3;

    let t1 = Instant::now();
    let mut caps = CapsHit::default();
    let mut merge = |c: CapsHit| {
        caps.state_cap |= c.state_cap;
        caps.step_bound |= c.step_bound;
        caps.loop_bound |= c.loop_bound;
        caps.isr_bound |= c.isr_bound;
    };
    // One exploration per first statement serves every direction from it.
    let mut by_s1: BTreeMap<StmtId, Vec<(StmtId, Rule)>> = BTreeMap::new();
    let mut eliminated = BTreeMap::new();
    for v in &verdicts {
        for (s1, s2, r) in [(&v.pair.s1, &v.pair.s2, v.rules[0]), (&v.pair.s2, &v.pair.s1, v.rules[1])] {
            if let Some(r) = r {
                by_s1.entry(s1.clone()).or_default().push((s2.clone(), r));
                *eliminated.entry(r).or_insert(0) += 1;
            }
        }
    }
    let mut violations = Vec::new();
    for (s1, targets) in &by_s1 {
        let all = semantics::oib_all(p, cfg, bounds, s1).expect("statement of this program");
        merge(all.caps_hit);
        for (s2, r) in targets {
            if let Some(w) = all.witnesses.get(s2) {
                violations.push(Violation { s1: s1.clone(), s2: s2.clone(), rule: Some(*r), witness: w.clone() });
            }
        }
    }
    let mut confirmed = 0;
    for v in verdicts.iter_mut() {
        let res = semantics::mhp(p, cfg, bounds, &v.pair.s1, &v.pair.s2).expect("statement of this program");
        merge(res.caps_hit);
        match (v.verdict, res.witness) {
            (Verdict::PotentiallyRacy, Some(w)) => {
                confirmed += 1;
                v.witness = Some(w);
            }
            (Verdict::NonRacy, Some(w)) => violations.push(Violation {
                s1: v.pair.s1.clone(),
                s2: v.pair.s2.clone(),
                rule: None,
                witness: w,
            }),
            _ => {}
        }
    }
    let oracle_millis = t1.elapsed().as_secs_f64() * 1e3;
    Audit {
        report: Report::new(name.to_string(), cfg, verdicts, Some(confirmed)),
        confirmed,
        violations,
        caps_hit: caps,
        detector_millis,
        oracle_millis,
        eliminated,
    }
}
