use criterion::{criterion_group, criterion_main, Criterion};
use rbsb_core::{run_scenario, DesignKind, RunConfig};

fn scenario(c: &mut Criterion) {
    let cfg = RunConfig::packaged();
    let setting = &cfg.scenarios[8];
    let mut group = c.benchmark_group("run_scenario");
    group.sample_size(10);
    group.bench_function("setting_9/500_reps/all_designs", |b| {
        b.iter(|| run_scenario(setting, &DesignKind::ALL, &cfg.programme, 500, 0).unwrap())
    });
    group.bench_function("setting_9/500_reps/rbsb", |b| {
        b.iter(|| run_scenario(setting, &[DesignKind::Rbsb], &cfg.programme, 500, 0).unwrap())
    });
    group.finish();
}

criterion_group!(benches, scenario);
criterion_main!(benches);
