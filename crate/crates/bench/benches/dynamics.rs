use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spinphonon::dynamics::evolve_lindblad;
use spinphonon_bench::{anti_jc, cooling, jc};

fn rhs(c: &mut Criterion) {
    let mut group = c.benchmark_group("rhs");
    for n in [10, 30, 60] {
        let f = anti_jc(n).unwrap();
        let mut scratch = Vec::new();
        group.bench_with_input(BenchmarkId::new("anti_jc", n), &f, |b, f| b.iter(|| black_box(f.rhs(&mut scratch))));
    }
    for n in [20, 60, 93] {
        let f = cooling(n, 1).unwrap();
        let mut scratch = Vec::new();
        group.bench_with_input(BenchmarkId::new("cooling", n), &f, |b, f| b.iter(|| black_box(f.rhs(&mut scratch))));
    }
    group.finish();
}

fn evolve(c: &mut Criterion) {
    let mut group = c.benchmark_group("evolve");
    group.sample_size(10);
    let f = jc(6).unwrap();
    let spec = f.spec(200.0, 2001);
    group.bench_function("jc_fig3", |b| b.iter(|| black_box(evolve_lindblad(&f.model, &spec).unwrap())));
    let f = cooling(20, 2).unwrap();
    let spec = f.spec(15.0, 751);
    group.bench_function("cooling_20", |b| b.iter(|| black_box(evolve_lindblad(&f.model, &spec).unwrap())));
    group.finish();
}

criterion_group!(benches, rhs, evolve);
criterion_main!(benches);
