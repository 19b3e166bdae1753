use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use thicksum::functions::lambda;
use thicksum::halfline::{chain_certify, phase_scan, ChainParams};
use thicksum::numeric::exp;
use thicksum::rational::{int, ratio};
use thicksum::thickness::tau;
use thicksum::AdmissibleFunction;
use thicksum_bench::{cantor, faa, phase_cell, staircase};

fn thickness(c: &mut Criterion) {
    let mut group = c.benchmark_group("tau");
    for depth in [4, 8, 10] {
        let k = cantor(depth);
        group.bench_with_input(BenchmarkId::from_parameter(depth), &k, |b, k| {
            b.iter(|| tau(black_box(k)))
        });
    }
    group.finish();
}

fn sums(c: &mut Criterion) {
    let mut group = c.benchmark_group("minkowski_sum");
    for depth in [4, 6, 8] {
        let k = cantor(depth);
        group.bench_with_input(BenchmarkId::from_parameter(depth), &k, |b, k| {
            b.iter(|| black_box(k).minkowski_sum(k))
        });
    }
    group.finish();
}

fn relative_variation(c: &mut Criterion) {
    let mut group = c.benchmark_group("lambda");
    for n in [8, 32, 128] {
        let g = staircase(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, g| {
            b.iter(|| lambda(black_box(g), &int(1), &int(0), 64).unwrap())
        });
    }
    group.finish();
}

fn enclosures(c: &mut Criterion) {
    let mut group = c.benchmark_group("exp");
    let x = ratio(7, 3);
    for bits in [64, 256, 1024] {
        group.bench_with_input(BenchmarkId::from_parameter(bits), &bits, |b, &bits| {
            b.iter(|| exp(black_box(&x), bits))
        });
    }
    group.finish();
}

fn engines(c: &mut Criterion) {
    let f = faa(2, (1, 1));
    let g = AdmissibleFunction::power(int(2)).unwrap();
    let params = ChainParams {
        big_a: int(2),
        a: int(2),
        eps: int(1),
        skip: 0,
    };
    c.bench_function("chain_certify/power2", |b| {
        b.iter(|| chain_certify(black_box(&f), &g, &params, 6).unwrap())
    });
    let mut group = c.benchmark_group("phase_cell");
    group.sample_size(20);
    for a in ["1", "ln2", "3/2"] {
        let (r, a_val) = phase_cell(a);
        group.bench_with_input(BenchmarkId::from_parameter(a), &a_val, |b, a_val| {
            b.iter(|| {
                phase_scan(
                    &int(10),
                    std::slice::from_ref(&r),
                    std::slice::from_ref(a_val),
                    20,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    thickness,
    sums,
    relative_variation,
    enclosures,
    engines
);
criterion_main!(benches);
