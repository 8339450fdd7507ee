use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dgat_bench::dataset;
use dgat_core::rewire::{rewire, RewireMode};
use dgat_core::spectral::{directional_field, eigendecompose, LaplacianParams, DEFAULT_EPS0};
use std::hint::black_box;

fn eigen(c: &mut Criterion) {
    let mut group = c.benchmark_group("eigendecompose");
    group.sample_size(10);
    for n in [100, 200, 400] {
        let d = dataset(n, 0.5);
        group.bench_with_input(BenchmarkId::from_parameter(n), &d, |b, d| {
            let p = LaplacianParams::random_walk(0.5).unwrap();
            b.iter(|| eigendecompose(black_box(&d.graph), p).unwrap())
        });
    }
    group.finish();
}

fn field_and_rewire(c: &mut Criterion) {
    let d = dataset(400, 0.1);
    let bundle = eigendecompose(&d.graph, LaplacianParams::random_walk(0.5).unwrap()).unwrap();
    c.bench_function("directional_field/400", |b| {
        b.iter(|| directional_field(black_box(&d.graph), &bundle.phi1, DEFAULT_EPS0).unwrap())
    });
    c.bench_function("rewire/400", |b| {
        b.iter(|| {
            rewire(
                black_box(&d.graph),
                &bundle,
                RewireMode::HeterophilyPruneAndAdd,
                0.01,
            )
            .unwrap()
        })
    });
}

criterion_group!(benches, eigen, field_and_rewire);
criterion_main!(benches);
