use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use idaracer::semantics::{explore, oib_all, Bounds, Machine};
use idaracer::DetectorConfig;
use idaracer_bench::corpus;

fn state_space(c: &mut Criterion) {
    let cfg = DetectorConfig::default();
    let bounds = Bounds::default();
    let mut g = c.benchmark_group("explore");
    g.sample_size(10);
    for (name, p) in corpus() {
        g.bench_with_input(BenchmarkId::from_parameter(&name), &p, |b, p| {
            b.iter(|| explore(&Machine::new(p, cfg, bounds)).len())
        });
    }
    g.finish();

    let (_, p) = corpus().into_iter().find(|(n, _)| n == "prodcons").expect("prodcons in corpus");
    let s1 = p.resolve_stmt("cons:21").expect("statement");
    c.bench_function("oib_all/prodcons cons:21", |b| b.iter(|| oib_all(&p, cfg, bounds, &s1).expect("valid statement")));
}

criterion_group!(benches, state_space);
criterion_main!(benches);
