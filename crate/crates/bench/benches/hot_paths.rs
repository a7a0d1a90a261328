//! Hot-path benchmarks: Lie bracket, residual assembly (both metric
//! modes), and complete solves at a small resolution.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use sp4_core::grid::TorusDomain;
use sp4_core::higgs::{build_sl4, HiggsData};
use sp4_core::liealg::{bracket, LieElem, DIM};
use sp4_core::solver::{residual, solve, Background, Init, MetricField, Mode, SolveOptions};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn bench_bracket(cr: &mut Criterion) {
    let a = LieElem::cartan(c(0.3, 0.1), c(-0.2, 0.4));
    let mut b = LieElem::zero();
    for i in 0..DIM {
        b.c[i] = c(0.1 * i as f64 + 0.2, -0.05 * i as f64);
    }
    cr.bench_function("liealg bracket (dense elements)", |bench| {
        bench.iter(|| bracket(black_box(&a), black_box(&b)))
    });
}

fn bench_residual(cr: &mut Criterion) {
    let n = 32;
    let dom = TorusDomain::square(n).unwrap();
    let h = HiggsData::constants(2, 2, c(1.0, 0.0), c(0.3, 0.0), c(0.0, 0.0)).unwrap();
    let _ = build_sl4(&h);
    let mdiag = MetricField::flat(Mode::Diagonal, n);
    let mfull = MetricField::flat(Mode::Full, n);
    let bg = Background::ZERO;
    cr.bench_function("residual assembly diagonal n=32", |bench| {
        bench.iter(|| residual(black_box(&h), black_box(&mdiag), &dom, &bg).unwrap())
    });
    cr.bench_function("residual assembly full n=32", |bench| {
        bench.iter(|| residual(black_box(&h), black_box(&mfull), &dom, &bg).unwrap())
    });
}

fn bench_solve(cr: &mut Criterion) {
    let n = 16;
    let dom = TorusDomain::square(n).unwrap();
    let h = HiggsData::constants(2, 2, c(1.0, 0.0), c(0.3, 0.0), c(0.0, 0.0)).unwrap();
    let opts = SolveOptions::default();
    cr.bench_function("diagonal solve n=16 (random init)", |bench| {
        bench.iter(|| {
            solve(black_box(&h), &dom, Mode::Diagonal, Init::Random(5), &opts).unwrap()
        })
    });
    let n = 8;
    let dom = TorusDomain::square(n).unwrap();
    cr.bench_function("full solve n=8 (random init)", |bench| {
        bench.iter(|| solve(black_box(&h), &dom, Mode::Full, Init::Random(5), &opts).unwrap())
    });
}

criterion_group!(benches, bench_bracket, bench_residual, bench_solve);
criterion_main!(benches);
