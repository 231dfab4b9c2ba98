use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

use vat_activity::gait::extract_gait_frames;
use vat_activity::model::{cross_validate, CvConfig, DesignMatrix};
use vat_activity::synth::{gen_walk, WalkSpec};
use vat_activity::Execution;

const STRATEGIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn gait_frames(c: &mut Criterion) {
    let walk = gen_walk(
        &WalkSpec {
            duration_s: 300.0,
            ..WalkSpec::default()
        },
        1,
    );
    let mut group = c.benchmark_group("gait_frames_300s");
    group.sample_size(10);
    for (name, exec) in STRATEGIES {
        group.bench_function(name, |b| b.iter(|| extract_gait_frames(black_box(&walk), 0, exec).unwrap()));
    }
    group.finish();
}

fn design(n: usize, k: usize) -> DesignMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| rng.random::<f64>()).collect()).collect();
    let target = rows.iter().map(|r| r.iter().take(5).sum::<f64>() + 0.1 * rng.random::<f64>()).collect();
    DesignMatrix::new(
        (0..n).map(|i| format!("S{i:04}")).collect(),
        (0..k).map(|j| format!("f{j}")).collect(),
        rows,
        target,
    )
    .unwrap()
}

fn cv_repeats(c: &mut Criterion) {
    let x = design(400, 220);
    let cfg = CvConfig::default();
    let mut group = c.benchmark_group("cv_400x220");
    group.sample_size(10);
    for (name, exec) in STRATEGIES {
        group.bench_function(name, |b| b.iter(|| cross_validate(black_box(&x), &cfg, exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, gait_frames, cv_repeats);
criterion_main!(benches);
