//! Single-thread pool against the default rayon pool on the two hot paths:
//! Monte-Carlo trials and cross-validated tree fitting.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mvguide::sim::{
    bias_experiment, gen_scenario, synthetic_concrete, trial_rng, BiasOptions, ScenarioKind, ScenarioSpec,
};
use mvguide::tree::{cross_validate, CvOptions};
use mvguide::{GrowConfig, Sample};
use rayon::ThreadPool;

fn pools() -> Vec<(String, ThreadPool)> {
    let all = rayon::current_num_threads();
    let build = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    vec![
        ("sequential".into(), build(1)),
        (format!("default_{all}_threads"), build(all)),
    ]
}

fn bias(c: &mut Criterion) {
    let population = Sample::from_dataset(&synthetic_concrete()).unwrap();
    let opts = BiasOptions {
        trials: 200,
        ..Default::default()
    };
    let mut group = c.benchmark_group("bias_200_trials");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| bias_experiment(&population, &opts).unwrap()))
        });
    }
    group.finish();
}

fn cv_fit(c: &mut Criterion) {
    let spec = ScenarioSpec::new(ScenarioKind::IndepUniform3, 1000);
    let sample = gen_scenario(&spec, &mut trial_rng(1, 0)).unwrap().sample;
    let config = GrowConfig::multiresponse();
    let mut group = c.benchmark_group("cv_fit_n1000");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| cross_validate(&sample, &config, &CvOptions::default()).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bias, cv_fit);
criterion_main!(benches);
