use proptest::prelude::*;

use idaracer::analyses::Interval;
use idaracer::detector::{detect_races, Metrics, Verdict};
use idaracer::frontend::{pretty_print, shape_of};
use idaracer::harness::{generate, FuzzConfig};
use idaracer::semantics::{explore, explore_ordered, Bounds, Machine, Order};
use idaracer::{parse, DetectorConfig, MutexMode};

fn small_bounds() -> Bounds {
    Bounds { loop_bound: 1, isr_bound: 1, ..Bounds::default() }
}

fn any_config() -> impl Strategy<Value = DetectorConfig> {
    (prop_oneof![Just(MutexMode::Plain), Just(MutexMode::Inheritance), Just(MutexMode::Ceiling)], any::<bool>())
        .prop_map(|(mutex_mode, round_robin)| DetectorConfig { mutex_mode, round_robin })
}

proptest! {
    #[test]
    fn metrics_arithmetic(c in 0usize..500, p_frac in 0.0f64..=1.0, k_frac in 0.0f64..=1.0) {
        let p = (c as f64 * p_frac) as usize;
        let k = (p as f64 * k_frac) as usize;
        let m = Metrics::new(c, p, Some(k));
        prop_assert!((0.0..=100.0).contains(&m.elim_pct));
        let prec = m.precision_pct.unwrap();
        prop_assert!((0.0..=100.0).contains(&prec));
        if c == 0 {
            prop_assert_eq!(m.elim_pct, 0.0);
        } else {
            prop_assert!((m.elim_pct * c as f64 / 100.0 - (c - p) as f64).abs() < 1e-9);
        }
        if p == 0 {
            prop_assert_eq!(prec, 100.0);
        }
    }

    #[test]
    fn hull_contains_both(a in 0u32..20, b in 0u32..20, c in 0u32..20) {
        let h = Interval::point(a).hull(Interval::point(b)).hull(Interval::point(c));
        prop_assert!(h.contains(a) && h.contains(b) && h.contains(c));
        prop_assert_eq!(h.lo, a.min(b).min(c));
        prop_assert_eq!(h.hi, a.max(b).max(c));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pretty_print_round_trip(seed in any::<u64>(), index in 0u64..1000) {
        let src = generate(seed, index, &FuzzConfig::default());
        let p = parse(&src).unwrap();
        let q = parse(&pretty_print(&p)).unwrap();
        prop_assert_eq!(shape_of(&p), shape_of(&q));
    }

    #[test]
    fn frontier_order_does_not_change_states(seed in any::<u64>(), index in 0u64..1000) {
        let fc = FuzzConfig { max_tasks: 2, max_stmts: 4, ..FuzzConfig::default() };
        let p = parse(&generate(seed, index, &fc)).unwrap();
        let m = Machine::new(&p, DetectorConfig::default(), small_bounds());
        let bfs = explore_ordered(&m, Order::Bfs);
        let dfs = explore_ordered(&m, Order::Dfs);
        prop_assert_eq!(bfs.len(), dfs.len());
        prop_assert!(bfs.states.iter().all(|s| dfs.states.contains(s)));
    }

    #[test]
    fn exploration_is_deterministic(seed in any::<u64>(), index in 0u64..1000, cfg in any_config()) {
        let fc = FuzzConfig { max_tasks: 2, max_stmts: 4, ..FuzzConfig::default() };
        let p = parse(&generate(seed, index, &fc)).unwrap();
        let m = Machine::new(&p, cfg, small_bounds());
        let (a, b) = (explore(&m), explore(&m));
        prop_assert!(a.states.iter().eq(b.states.iter()));
        prop_assert_eq!(a.transitions, b.transitions);
    }

    #[test]
    fn disabling_round_robin_never_adds_races(seed in any::<u64>(), index in 0u64..1000, mode in 0usize..3) {
        let p = parse(&generate(seed, index, &FuzzConfig::default())).unwrap();
        let mutex_mode = [MutexMode::Plain, MutexMode::Inheritance, MutexMode::Ceiling][mode];
        let rr = detect_races(&p, DetectorConfig { mutex_mode, round_robin: true });
        let no_rr = detect_races(&p, DetectorConfig { mutex_mode, round_robin: false });
        prop_assert_eq!(rr.len(), no_rr.len());
        for (a, b) in rr.iter().zip(&no_rr) {
            prop_assert!(!(a.verdict == Verdict::NonRacy && b.verdict == Verdict::PotentiallyRacy), "{:?}", a.pair);
        }
    }
}
