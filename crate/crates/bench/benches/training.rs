use criterion::{criterion_group, criterion_main, Criterion};
use gaussnet_bench::fixture;
use gaussnet_core::ppo::{train, FixedEpisode};
use gaussnet_core::PpoConfig;

fn short_training(c: &mut Criterion) {
    let (t, faults) = fixture(3, 0.1, 4);
    let dst = *faults.healthy().last().unwrap();
    let cfg = PpoConfig {
        episodes: 50,
        ..Default::default()
    };
    let mut group = c.benchmark_group("ppo");
    group.sample_size(20);
    group.bench_function("train_50_episodes", |b| {
        b.iter(|| {
            let mut sampler = FixedEpisode {
                topology: &t,
                faults: &faults,
                src: 0,
                dst,
            };
            train(&mut sampler, &cfg).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, short_training);
criterion_main!(benches);
