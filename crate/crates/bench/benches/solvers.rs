use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use copart_core::synth::{random_channel, random_joint, random_labels};
use copart_core::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sequential_sweep");
    group.sample_size(10);
    for m in [20_000, 100_000] {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let joint = random_joint(&mut rng, 4, m, 0.0);
        let channel = random_channel(&mut rng, 8, 8);
        let spec = ProblemSpec::new(joint, channel, 8, Impurity::Entropy, Constraint::Entropy, 1.0).unwrap();
        let data = PointData::new(&spec);
        let labels = random_labels(&mut rng, m, 8);
        group.bench_with_input(BenchmarkId::from_parameter(m), &labels, |b, labels| {
            b.iter_batched(
                || SweepState::new(&spec, &data, labels.clone()).unwrap(),
                |mut state| state.sweep(SweepMode::Sequential, 1e-12),
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

fn dp(c: &mut Criterion) {
    let mut group = c.benchmark_group("dp_identity");
    group.sample_size(10);
    for m in [250, 500, 1000] {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let joint = random_joint(&mut rng, 2, m, 0.0);
        let spec = ProblemSpec::with_identity_channel(joint, 8, Impurity::Entropy, Constraint::None, 1.0).unwrap();
        group.bench_function(BenchmarkId::from_parameter(m), |b| b.iter(|| solve_dp_identity(&spec).unwrap()));
    }
    group.finish();
}

fn exact_small(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let joint = random_joint(&mut rng, 2, 40, 0.0);
    let channel = random_channel(&mut rng, 3, 3);
    let spec = ProblemSpec::new(joint, channel, 3, Impurity::Gini, Constraint::Entropy, 1.0).unwrap();
    c.bench_function("thresholds_m40_k3", |b| b.iter(|| solve_binary_thresholds(&spec).unwrap()));

    let joint = random_joint(&mut rng, 3, 10, 0.0);
    let channel = random_channel(&mut rng, 3, 2);
    let spec = ProblemSpec::new(joint, channel, 3, Impurity::Entropy, Constraint::None, 1.0).unwrap();
    c.bench_function("bruteforce_m10_k3", |b| b.iter(|| solve_bruteforce(&spec).unwrap()));

    let opts = SolverOptions::default();
    c.bench_function("iterative_m10_k3", |b| b.iter(|| solve_iterative(&spec, &opts).unwrap()));
}

criterion_group!(benches, sweep, dp, exact_small);
criterion_main!(benches);
