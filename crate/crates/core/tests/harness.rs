use std::path::PathBuf;

use idaracer::detector::Rule;
use idaracer::harness::{audit_program, fuzz_soundness, generate, lines_of_code, run_corpus, run_file, FuzzConfig};
use idaracer::semantics::Bounds;
use idaracer::{parse, validate, DetectorConfig};

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

#[test]
fn prodcons_audit() {
    let r = run_file(&corpus_dir().join("prodcons.ida"), DetectorConfig::default(), Bounds::default()).unwrap();
    let m = r.metrics();
    assert_eq!((m.conflicting, m.potential), (6, 1));
    assert_eq!(r.audit.confirmed, 1);
    assert_eq!(m.precision_pct, Some(100.0));
    assert!(r.audit.violations.is_empty());
    assert_eq!(r.audit.eliminated.get(&Rule::C5), Some(&8));
    assert_eq!(r.audit.eliminated.get(&Rule::C1), Some(&2));
    assert_eq!(r.audit.eliminated.get(&Rule::C2), Some(&1));
}

#[test]
fn zero_conflict_convention() {
    let p = parse("main { create(a, 1, h); start; } task a { x := 1; } isr i { y := 2; }").unwrap();
    let a = audit_program("z", &p, DetectorConfig::default(), Bounds::default());
    assert_eq!(a.report.metrics.conflicting, 0);
    assert_eq!(a.report.metrics.elim_pct, 0.0);
    assert_eq!(a.report.metrics.precision_pct, Some(100.0));
}

#[test]
fn corpus_table_has_total_row() {
    let run = run_corpus(&corpus_dir(), DetectorConfig::default(), Bounds::default()).unwrap();
    assert!(run.results.len() >= 10);
    assert_eq!(run.violations(), 0);
    let md = run.to_markdown();
    assert!(md.starts_with("| Program | LoC | Conf. acc. | True Races |"));
    assert!(md.lines().last().unwrap().starts_with("| Total |"));
    let csv = run.to_csv();
    assert_eq!(csv.lines().count(), run.results.len() + 2);
    let t = run.totals();
    assert_eq!(t.conflicting, run.results.iter().map(|r| r.metrics().conflicting).sum::<usize>());
}

#[test]
fn loc_skips_blank_and_comment_lines() {
    assert_eq!(lines_of_code("// c\n\nmain {\n  start;\n}\n"), 3);
}

#[test]
fn generator_is_deterministic_and_valid() {
    let fc = FuzzConfig::default();
    for i in 0..50 {
        let a = generate(7, i, &fc);
        assert_eq!(a, generate(7, i, &fc));
        let p = parse(&a).unwrap_or_else(|e| panic!("{e}\n{a}"));
        assert!(validate(&p).is_empty(), "{a}");
    }
    assert_ne!(generate(7, 0, &fc), generate(7, 1, &fc));
}

#[test]
fn small_fuzz_run_is_sound() {
    let r = fuzz_soundness(11, 40, &FuzzConfig::default(), DetectorConfig::default(), Bounds::default());
    assert_eq!(r.programs, 40);
    assert!(r.counterexamples.is_empty(), "{}", r.to_text());
    assert!(r.eliminated.values().sum::<usize>() > 0);
}
