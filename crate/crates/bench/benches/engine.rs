use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use skewsim_core::chain::{run_chain_with, ChainParams, ChainWalker};
use skewsim_core::field::{FieldParams, FieldSpec};
use skewsim_core::oracle::exact_law;
use skewsim_core::scale::{rescale, skorohod_map, tanaka_local_time};

fn chain_params(dim: usize, steps: usize) -> ChainParams {
    ChainParams {
        dim,
        resolution: steps as u64,
        steps,
        horizon: 1.0,
        start: vec![0; dim],
        seed: 99,
    }
}

fn field_for(dim: usize) -> FieldSpec {
    let mut value = vec![1.3; dim];
    value[0] = 0.5;
    FieldSpec::new(FieldParams::Constant { value }, dim).unwrap()
}

fn bench_chain_steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("chain_steps");
    for dim in [1usize, 2, 3] {
        let steps = 10_000;
        let params = chain_params(dim, steps);
        let field = field_for(dim);
        group.throughput(Throughput::Elements(steps as u64));
        group.bench_with_input(BenchmarkId::from_parameter(dim), &dim, |b, _| {
            let mut path = 0u64;
            b.iter(|| {
                path += 1;
                let mut walker = ChainWalker::new(&params, &field, path);
                for _ in 0..steps {
                    walker.advance();
                }
                black_box(walker.state()[0])
            });
        });
    }
    group.finish();
}

fn bench_path_ops(c: &mut Criterion) {
    let params = chain_params(1, 8_192);
    let field = field_for(1);
    let run = run_chain_with(&params, &field, 0, false);
    let path = rescale(&run);
    let u = path.u_path();
    let mut group = c.benchmark_group("path_ops");
    group.throughput(Throughput::Elements(u.len() as u64));
    group.bench_function("skorohod_map", |b| {
        b.iter(|| black_box(skorohod_map(black_box(&u))))
    });
    group.bench_function("tanaka_local_time", |b| {
        b.iter(|| black_box(tanaka_local_time(black_box(&u))))
    });
    group.finish();
}

fn bench_exact_law(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact_law");
    group.sample_size(10);
    group.bench_function("d1_k2000", |b| {
        let field = field_for(1);
        b.iter(|| black_box(exact_law(&field, &[0], 2000, 2000).unwrap()))
    });
    group.bench_function("d2_k128", |b| {
        let field = field_for(2);
        b.iter(|| black_box(exact_law(&field, &[0, 0], 128, 128).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, bench_chain_steps, bench_path_ops, bench_exact_law);
criterion_main!(benches);
