use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use dqcalib::harness::{
    make_measurement_poses, make_measurements, make_motions, perturb_measurements, NoiseModel,
    PaperFixtures,
};
use dqcalib::{axxb, axzb, MeasurementSet, SolverOptions};

fn solvers(c: &mut Criterion) {
    let f = PaperFixtures::load();
    let opts = SolverOptions::default();

    let exact = make_measurements(&f.ground_truth, &f.nonparallel).unwrap();
    let exact_motions = make_motions(&exact).unwrap();
    let parallel = make_measurements(&f.ground_truth, &f.parallel).unwrap();
    let parallel_motions = make_motions(&parallel).unwrap();
    let noisy_poses = perturb_measurements(
        &make_measurement_poses(&f.ground_truth, &f.nonparallel),
        &NoiseModel::new(0.01, 7).unwrap(),
    )
    .unwrap();
    let noisy = MeasurementSet::from_poses(&noisy_poses).unwrap();
    let noisy_motions = make_motions(&noisy).unwrap();

    let mut g = c.benchmark_group("axxb");
    g.bench_function("noiseless", |b| b.iter(|| axxb::solve(black_box(&exact_motions), &opts)));
    g.bench_function("parallel", |b| b.iter(|| axxb::solve(black_box(&parallel_motions), &opts)));
    g.bench_function("noisy", |b| b.iter(|| axxb::solve(black_box(&noisy_motions), &opts)));
    g.finish();

    let mut g = c.benchmark_group("axzb");
    g.bench_function("noiseless", |b| b.iter(|| axzb::solve(black_box(&exact), &opts)));
    g.bench_function("parallel", |b| b.iter(|| axzb::solve(black_box(&parallel), &opts)));
    g.bench_function("noisy", |b| b.iter(|| axzb::solve(black_box(&noisy), &opts)));
    g.finish();
}

criterion_group!(benches, solvers);
criterion_main!(benches);
