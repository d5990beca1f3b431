//! Sequential vs parallel sweeps over the hot grids.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use grandlp::grand::{grand_norm_with, potential_lq_norm};
use grandlp::norms::FormSpec;
use grandlp::potential::{potential_on_grid, EvalGrid, KernelSpec};
use grandlp::psi::{make_power_psi, PowerPsiSpec};
use grandlp::{Execution, QuadratureSpec};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn potential_grid(c: &mut Criterion) {
    let f = "g_delta:1".parse::<FormSpec>().unwrap().build().unwrap();
    let kernel = KernelSpec::Riesz { alpha: 0.5 };
    let grid = EvalGrid::uniform(-5.0, 5.0, 256).unwrap();
    let quad = QuadratureSpec::default();
    let mut group = c.benchmark_group("potential_on_grid");
    for (label, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(label), &exec, |b, &exec| {
            b.iter(|| potential_on_grid(black_box(&f), &kernel, &grid, &quad, exec).unwrap())
        });
    }
    group.finish();
}

fn grand_norm_grid(c: &mut Criterion) {
    let f = "g_delta:0".parse::<FormSpec>().unwrap().build().unwrap();
    let psi = make_power_psi(PowerPsiSpec { a: 1.0, b: 4.0, beta: 1.0, gamma: 0.5 }).unwrap();
    let quad = QuadratureSpec::default();
    let mut group = c.benchmark_group("grand_norm");
    for (label, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(label), &exec, |b, &exec| {
            b.iter(|| grand_norm_with(black_box(&f), &psi, &quad, exec).unwrap())
        });
    }
    group.finish();
}

fn tabulated_norm(c: &mut Criterion) {
    let f = "indicator:0:1".parse::<FormSpec>().unwrap().build().unwrap();
    let kernel = KernelSpec::Riesz { alpha: 0.5 };
    let quad = QuadratureSpec::default();
    let mut group = c.benchmark_group("potential_lq_norm");
    group.sample_size(10);
    for (label, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(label), &exec, |b, &exec| {
            b.iter(|| potential_lq_norm(black_box(&f), &kernel, 3.0, &quad, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, potential_grid, grand_norm_grid, tabulated_norm);
criterion_main!(benches);
