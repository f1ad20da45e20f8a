use std::hint::black_box;

use adapt_bench::{expansion, float_in, orientation, rng};
use adapt_core::arith::{add, div, mul};
use adapt_core::eft::{fast_two_sum, two_product, two_sum};
use adapt_core::eval::{eval_adaptive, parse_expr, parse_rational, sign_det, Bindings, EvalOptions};
use adapt_core::toolset::collect;
use adapt_core::{Binary64, GenericFormat};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn eft(c: &mut Criterion) {
    let mut r = rng(1);
    let pairs: Vec<(f64, f64)> = (0..256).map(|_| (float_in(&mut r, 1, 10), float_in(&mut r, -40, 0))).collect();
    let mut g = c.benchmark_group("eft");
    g.bench_function("two_sum", |b| {
        b.iter(|| pairs.iter().map(|(x, y)| two_sum(&Binary64, x, y).unwrap().lo).sum::<f64>())
    });
    g.bench_function("fast_two_sum", |b| {
        b.iter(|| pairs.iter().map(|(x, y)| fast_two_sum(&Binary64, x, y).unwrap().lo).sum::<f64>())
    });
    g.bench_function("two_product", |b| {
        b.iter(|| pairs.iter().map(|(x, y)| two_product(&Binary64, x, y).unwrap().lo).sum::<f64>())
    });
    g.finish();
}

fn streams(c: &mut Criterion) {
    let mut g = c.benchmark_group("streams");
    for len in [2, 4, 8] {
        let mut r = rng(len as u64);
        let a = expansion(&mut r, len);
        let d = expansion(&mut r, len);
        g.bench_with_input(BenchmarkId::new("add", len), &len, |b, _| {
            b.iter(|| collect(&mut add(&Binary64, black_box(&a), black_box(&d)).unwrap()).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("mul", len), &len, |b, _| {
            b.iter(|| collect(&mut mul(&Binary64, black_box(&a), black_box(&d)).unwrap()).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("div4", len), &len, |b, _| {
            b.iter(|| collect(&mut div(&Binary64, black_box(&a), black_box(&d), 4).unwrap()).unwrap())
        });
    }
    g.finish();
}

fn evaluation(c: &mut Criterion) {
    let expr = parse_expr("4.995*1.609344 - 8").unwrap();
    let none = Bindings::new();
    let mut g = c.benchmark_group("eval");
    for target in ["1e-1", "1e-9", "1e-30"] {
        let opts = EvalOptions { target: parse_rational(target).unwrap(), ..Default::default() };
        g.bench_with_input(BenchmarkId::new("binary64", target), &opts, |b, o| {
            b.iter(|| eval_adaptive(&Binary64, &expr, &none, o).unwrap())
        });
        let single = GenericFormat::binary32();
        g.bench_with_input(BenchmarkId::new("binary32-model", target), &opts, |b, o| {
            b.iter(|| eval_adaptive(&single, &expr, &none, o).unwrap())
        });
    }
    let mut r = rng(9);
    let cases: Vec<_> = (0..64).map(|_| orientation(&mut r)).collect();
    g.bench_function("orientation", |b| {
        b.iter(|| cases.iter().filter(|m| sign_det(&Binary64, m).unwrap().is_gt()).count())
    });
    g.finish();
}

criterion_group!(benches, eft, streams, evaluation);
criterion_main!(benches);
