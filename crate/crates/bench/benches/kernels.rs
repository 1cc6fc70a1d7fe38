use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dicke_core::chain::{build_chain_scoped, expected_steps, Scope};
use dicke_core::simulate::run_many;
use dicke_core::{d_column, geometric_angle, AnglePolicy, Backend, Engine, ProtocolConfig, ResetPolicy, SpinSpec};

fn d_columns(c: &mut Criterion) {
    let mut group = c.benchmark_group("d_column");
    for two_j in [100u32, 400, 2000] {
        let spec = SpinSpec::new(two_j, 2).unwrap();
        let angle = geometric_angle(two_j, 0, 2).unwrap();
        group.bench_with_input(BenchmarkId::new("propagation", two_j), &spec, |b, &s| {
            b.iter(|| d_column(black_box(s), angle, Backend::TridiagonalPropagation).unwrap())
        });
        if two_j <= 400 {
            group.bench_with_input(BenchmarkId::new("log_sum", two_j), &spec, |b, &s| {
                b.iter(|| d_column(black_box(s), angle, Backend::LogSum).unwrap())
            });
        }
    }
    group.finish();
}

fn chains(c: &mut Criterion) {
    let mut group = c.benchmark_group("chain");
    group.sample_size(10);
    for two_j in [100u32, 400] {
        let cfg = ProtocolConfig::new(two_j, 0)
            .unwrap()
            .with_angle_policy(AnglePolicy::ApproxMt0)
            .unwrap()
            .with_reset_policy(ResetPolicy::SqrtJ);
        group.bench_with_input(BenchmarkId::new("expected_steps", two_j), &cfg, |b, &cfg| {
            b.iter(|| expected_steps(&build_chain_scoped(cfg, Scope::Reachable).unwrap()).unwrap().start_state_value)
        });
    }
    group.finish();
}

fn trajectories(c: &mut Criterion) {
    let cfg = ProtocolConfig::new(100, 0).unwrap().with_reset_policy(ResetPolicy::SqrtJ);
    c.bench_function("run_many/j50_x1000", |b| b.iter(|| run_many(black_box(&cfg), Engine::Chain, 1000).unwrap().len()));
}

criterion_group!(benches, d_columns, chains, trajectories);
criterion_main!(benches);
