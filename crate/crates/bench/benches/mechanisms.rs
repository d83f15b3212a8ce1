use std::sync::Arc;

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use regmech_core::betting::{replicate_betting, BettingScore, KellyConfig, Recorded};
use regmech_core::experiments::{run_experiment, ExperimentConfig, Scenario};
use regmech_core::license::{neyman_pearson_license, optimal_risk_averse_license, sup_value_over_obedient};
use regmech_core::projection::{kappa_projection, ProjectionConfig};
use regmech_core::{Categorical, CredalSet, EvidenceSpace, MechanismParams};

fn fixture() -> (Categorical, CredalSet, MechanismParams) {
    let space = EvidenceSpace::indexed(6).unwrap();
    let v = |p: [f64; 6]| Categorical::new(Arc::clone(&space), p.to_vec()).unwrap();
    let set = CredalSet::new(vec![
        v([0.30, 0.20, 0.15, 0.15, 0.10, 0.10]),
        v([0.10, 0.30, 0.20, 0.15, 0.15, 0.10]),
        v([0.10, 0.10, 0.30, 0.20, 0.15, 0.15]),
    ])
    .unwrap();
    let q = v([0.05, 0.10, 0.15, 0.20, 0.25, 0.25]);
    (q, set, MechanismParams::new(15.0, 250.0).unwrap())
}

fn licenses(c: &mut Criterion) {
    let (q, set, params) = fixture();
    c.bench_function("risk_neutral_lp", |b| b.iter(|| sup_value_over_obedient(black_box(&q), &set, &params).unwrap()));
    c.bench_function("neyman_pearson", |b| {
        b.iter(|| neyman_pearson_license(black_box(&q), &set.vertices()[0], &params).unwrap())
    });
    c.bench_function("kappa_projection", |b| {
        b.iter(|| kappa_projection(black_box(&q), &set, &params, &ProjectionConfig::default()).unwrap())
    });
    c.bench_function("risk_averse_license", |b| {
        b.iter(|| optimal_risk_averse_license(black_box(&q), &set, &params).unwrap())
    });
}

fn betting(c: &mut Criterion) {
    let space = EvidenceSpace::indexed(2).unwrap();
    let score = BettingScore::new(Arc::clone(&space), vec![1.0, -1.0], 0.0).unwrap();
    let source = Categorical::new(space, vec![0.55, 0.45]).unwrap();
    let params = MechanismParams::new(15.0, 250.0).unwrap();
    let cfg = KellyConfig::default();
    c.bench_function("replicate_betting_100x500", |b| {
        b.iter(|| replicate_betting(&source, &score, &cfg, &params, 100, 500, 1, Recorded::License).unwrap())
    });
}

fn experiments(c: &mut Criterion) {
    let mut group = c.benchmark_group("experiments");
    group.sample_size(10);
    group.bench_function("simplex_gaming", |b| {
        let cfg = ExperimentConfig::default_for(Scenario::SimplexGaming);
        b.iter(|| run_experiment(&cfg).unwrap())
    });
    group.bench_function("fairness", |b| {
        let cfg = ExperimentConfig::default_for(Scenario::Fairness);
        b.iter(|| run_experiment(&cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, licenses, betting, experiments);
criterion_main!(benches);
