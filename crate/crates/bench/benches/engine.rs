use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rbsb_bench::{mixture, programme, studies};
use rbsb_core::metrics::{ess_elir, ess_moment};
use rbsb_core::{advance, path_weights, Direction, EngineState};

fn sequential_analysis(c: &mut Criterion) {
    let mut group = c.benchmark_group("advance");
    for k in [2, 5, 10] {
        let spec = programme(k);
        let obs = studies(k);
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, _| {
            b.iter(|| {
                let mut state = EngineState::new();
                for o in &obs {
                    state = advance(&state, &spec, black_box(o)).unwrap();
                }
                state
            })
        });
    }
    group.finish();
}

fn mixture_summaries(c: &mut Criterion) {
    let mut group = c.benchmark_group("mixture");
    for k in [1, 3, 5] {
        let mix = mixture(k);
        group.bench_with_input(BenchmarkId::new("ess_elir", k), &mix, |b, m| b.iter(|| ess_elir(black_box(m), 4.0).unwrap()));
        group.bench_with_input(BenchmarkId::new("ess_moment", k), &mix, |b, m| b.iter(|| ess_moment(black_box(m), 4.0).unwrap()));
        group.bench_with_input(BenchmarkId::new("median", k), &mix, |b, m| b.iter(|| black_box(m).median()));
        group.bench_with_input(BenchmarkId::new("success_probability", k), &mix, |b, m| {
            b.iter(|| black_box(m).success_probability(Direction::HigherIsBetter))
        });
    }
    group.finish();
}

fn weights(c: &mut Criterion) {
    let ws: Vec<f64> = (0..20).map(|i| if i == 0 { 0.0 } else { 0.8 }).collect();
    c.bench_function("path_weights/20", |b| b.iter(|| path_weights(black_box(&ws)).unwrap()));
}

criterion_group!(benches, sequential_analysis, mixture_summaries, weights);
criterion_main!(benches);
