use idaracer::analyses::analyze;
use idaracer::detector::{self, Rule, Rules, Verdict, RULE_ORDER};
use idaracer::{parse, DetectorConfig, Program};

fn load(name: &str) -> Program {
    let path = format!("{}/../../corpus/{name}.ida", env!("CARGO_MANIFEST_DIR"));
    parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn find<'a>(v: &'a [detector::RaceVerdict], s1: &str, s2: &str) -> &'a detector::RaceVerdict {
    v.iter()
        .find(|r| r.pair.s1.to_string() == s1 && r.pair.s2.to_string() == s2)
        .unwrap_or_else(|| panic!("no pair {s1} {s2}"))
}

#[test]
fn prodcons_pairs() {
    let p = load("prodcons");
    let v = detector::detect_races(&p, DetectorConfig::default());
    let got: Vec<(String, String, String)> =
        v.iter().map(|r| (r.pair.var.clone(), r.pair.s1.to_string(), r.pair.s2.to_string())).collect();
    let want = [
        ("item", "main:1", "prod:12"),
        ("item", "main:1", "cons:21"),
        ("count", "main:2", "prod:13"),
        ("count", "main:2", "cons:23"),
        ("item", "prod:12", "cons:21"),
        ("count", "prod:13", "cons:23"),
    ];
    assert_eq!(got.len(), 6);
    for (var, a, b) in want {
        assert!(got.contains(&(var.into(), a.into(), b.into())), "{var} {a} {b}: {got:?}");
    }
}

#[test]
fn prodcons_verdicts() {
    let p = load("prodcons");
    let v = detector::detect_races(&p, DetectorConfig::default());
    let count = find(&v, "prod:13", "cons:23");
    assert_eq!(count.verdict, Verdict::NonRacy);
    assert_eq!(count.rules, [Some(Rule::C1), Some(Rule::C2)]);
    let item = find(&v, "prod:12", "cons:21");
    assert_eq!(item.verdict, Verdict::PotentiallyRacy);
    assert_eq!(item.rules[1], None);
    for (a, b) in [("main:1", "prod:12"), ("main:1", "cons:21"), ("main:2", "prod:13"), ("main:2", "cons:23")] {
        assert_eq!(find(&v, a, b).rules, [Some(Rule::C5), Some(Rule::C5)], "{a} {b}");
    }
    let m = detector::Metrics::of(&v, None);
    assert_eq!((m.conflicting, m.potential), (6, 1));
    assert!((m.elim_pct - 500.0 / 6.0).abs() < 1e-9);
}

#[test]
fn reported_rule_is_the_first_that_holds() {
    let p = load("prodcons");
    let cfg = DetectorConfig::default();
    let facts = analyze(&p, &cfg);
    let rules = Rules::new(&p, &facts, cfg);
    for v in detector::detect_with_facts(&p, &facts, cfg) {
        for (s1, s2, r) in [(&v.pair.s1, &v.pair.s2, v.rules[0]), (&v.pair.s2, &v.pair.s1, v.rules[1])] {
            let all = rules.check_all(s1, s2);
            assert_eq!(r, all.first().copied());
            assert!(all.windows(2).all(|w| {
                RULE_ORDER.iter().position(|x| *x == w[0]) < RULE_ORDER.iter().position(|x| *x == w[1])
            }));
        }
    }
}

#[test]
fn read_only_sharing_has_no_pairs() {
    let p = parse("main { create(a, 1, h); create(b, 1, g); start; } task a { y := x; } task b { z := x; }").unwrap();
    assert!(detector::detect_races(&p, DetectorConfig::default()).is_empty());
}

#[test]
fn multi_instance_task_pairs_with_itself() {
    let p = parse("main { create(a, 1, h); create(a, 1, g); start; } task a { x := x + 1; }").unwrap();
    let v = detector::detect_races(&p, DetectorConfig::default());
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].pair.s1, v[0].pair.s2);
    assert_eq!(v[0].verdict, Verdict::PotentiallyRacy);
}

#[test]
fn disabling_round_robin_never_adds_races() {
    let p = load("prodcons");
    let rr = detector::detect_races(&p, DetectorConfig::default());
    let no = detector::detect_races(&p, DetectorConfig { round_robin: false, ..Default::default() });
    for (a, b) in rr.iter().zip(&no) {
        if a.verdict == Verdict::NonRacy {
            assert_eq!(b.verdict, Verdict::NonRacy);
        }
    }
}
