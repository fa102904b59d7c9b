use idaracer::analyses::{self, Interval, Multiplicity, NotionalLock};
use idaracer::{parse, DetectorConfig, MutexMode, Program};

fn load(name: &str) -> Program {
    let path = format!("{}/../../corpus/{name}.ida", env!("CARGO_MANIFEST_DIR"));
    parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn prio(p: &Program, f: &analyses::AnalysisFacts, s: &str) -> (u32, u32) {
    let iv = f.prio_at(p, &p.resolve_stmt(s).unwrap()).unwrap();
    (iv.lo, iv.hi)
}

#[test]
fn prodcons_priorities() {
    let p = load("prodcons");
    let f = analyses::analyze(&p, &DetectorConfig::default());
    for s in ["prod:10", "prod:11", "prod:12", "prod:13", "prod:14", "cons:20", "cons:21", "cons:22"] {
        assert_eq!(prio(&p, &f, s), (1, 1), "{s}");
    }
    assert_eq!(prio(&p, &f, "cons:23"), (2, 2));
    assert_eq!(prio(&p, &f, "cons:24"), (2, 2));
    assert_eq!(prio(&p, &f, "main:1"), (0, 0));
}

#[test]
fn prodcons_suspended_tasks() {
    let p = load("prodcons");
    let f = analyses::analyze(&p, &DetectorConfig::default());
    let cons = p.function("cons").unwrap();
    for s in ["prod:12", "prod:13", "prod:14"] {
        assert_eq!(f.suspended_at(&p, &p.resolve_stmt(s).unwrap()), vec![cons], "{s}");
    }
    for s in ["prod:10", "prod:11", "cons:21", "cons:23"] {
        assert!(f.suspended_at(&p, &p.resolve_stmt(s).unwrap()).is_empty(), "{s}");
    }
}

#[test]
fn prodcons_lists_and_handles() {
    let p = load("prodcons");
    let f = analyses::analyze(&p, &DetectorConfig::default());
    let (prod, cons) = (p.function("prod").unwrap(), p.function("cons").unwrap());
    assert_eq!(f.lists.susplist[cons], [prod].into());
    assert_eq!(f.lists.reslist[cons], [prod].into());
    assert!(f.lists.susplist[prod].is_empty());
    let k = p.functions[prod].cfg.instrs.iter().position(|i| i.id.line == 11).unwrap();
    assert_eq!(f.handles.get(prod, k).unwrap().must_run, Some(cons));
    assert_eq!(f.multiplicity[prod], Multiplicity::One);
}

#[test]
fn pre_start_main_holds_interrupts_and_scheduler_off() {
    let p = load("prodcons");
    let f = analyses::analyze(&p, &DetectorConfig::default());
    let s = p.resolve_stmt("main:1").unwrap();
    assert!(f.locks_at(&p, &s).contains(&NotionalLock::IntOff));
    assert!(f.locks_at(&p, &s).contains(&NotionalLock::SchedOff));
    assert!(f.is_pre_start(&p, &s));
}

#[test]
fn branch_handles_lose_uniqueness() {
    let p = parse(
        "main { if (x == 0) { create(a, 1, h); } else { create(b, 1, h); } start; }\n\
         task a { suspend(h); } task b { skip; }",
    )
    .unwrap();
    let f = analyses::analyze(&p, &DetectorConfig::default());
    let a = p.function("a").unwrap();
    let r = f.handles.get(a, 0).unwrap();
    assert_eq!(r.must_run, None);
    assert!(r.may_run.contains(&a) && r.may_run.contains(&p.function("b").unwrap()));
}

#[test]
fn constant_priority_without_set_priority() {
    let p = parse("main { create(t, 3, h); start; } task t { x := 1; y := x; }").unwrap();
    let f = analyses::analyze(&p, &DetectorConfig::default());
    let t = p.function("t").unwrap();
    assert!(f.prio[t].iter().flatten().all(|iv| *iv == Interval::point(3)));
}

#[test]
fn real_lock_held_between_lock_and_unlock() {
    let p = parse("main { create(t, 1, h); start; } task t {\nlock(l);\nx := 1;\nunlock(l);\ny := 1;\n}").unwrap();
    let f = analyses::analyze(&p, &DetectorConfig::default());
    let l = p.lock("l").unwrap();
    assert!(f.locks_at(&p, &p.resolve_stmt("t:3").unwrap()).contains(&NotionalLock::Real(l)));
    assert!(!f.locks_at(&p, &p.resolve_stmt("t:5").unwrap()).contains(&NotionalLock::Real(l)));
}

#[test]
fn ceiling_raises_inside_the_critical_section() {
    let p = parse(
        "mutex m; main { create(a, 1, h1); create(b, 3, h2); start; }\n\
         task a {\nlock(m);\nx := 1;\nunlock(m);\ny := 1;\n}\ntask b { lock(m); x := 2; unlock(m); }",
    )
    .unwrap();
    let cfg = DetectorConfig { mutex_mode: MutexMode::Ceiling, round_robin: false };
    let f = analyses::analyze(&p, &cfg);
    assert_eq!(prio(&p, &f, "a:4"), (3, 3));
    assert_eq!(prio(&p, &f, "a:6"), (1, 1));
}

#[test]
fn external_set_priority_widens() {
    let p = parse("main { create(a, 1, h); create(b, 2, g); start; } task a { x := 1; } task b { set_priority(h, 4); }")
        .unwrap();
    let f = analyses::analyze(&p, &DetectorConfig::default());
    assert_eq!(prio(&p, &f, "a:1"), (1, 4));
}

#[test]
fn facts_json_has_a_row_per_statement() {
    let p = load("prodcons");
    let f = analyses::analyze(&p, &DetectorConfig::default());
    let j = f.to_json(&p);
    assert_eq!(j["statements"].as_array().unwrap().len(), p.statements().len());
    let row = j["statements"].as_array().unwrap().iter().find(|r| r["stmt"] == "cons:23").unwrap();
    assert_eq!(row["prio"], serde_json::json!([2, 2]));
}
