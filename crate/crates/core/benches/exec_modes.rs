//! Sequential versus rayon-parallel execution of the batch workloads.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fairattn::data::{apply_preprocess, fit_preprocess, generate_synthetic};
use fairattn::exec::Exec;
use fairattn::metrics::fairness_report;
use fairattn::model::{Model, ModelConfig};
use fairattn::training::{batch_gradient, train, CarForm, LambdaMode, Objective, TrainConfig};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn gradients(c: &mut Criterion) {
    let raw = generate_synthetic(256, 1).unwrap();
    let ds = apply_preprocess(&raw, &fit_preprocess(&raw).unwrap()).unwrap();
    let model = Model::new(ds.schema_arc().clone(), ModelConfig::new(ds.schema().task())).unwrap();
    let rows: Vec<usize> = (0..ds.len()).collect();
    let mut group = c.benchmark_group("batch_gradient_256");
    for (name, exec) in MODES {
        for (label, obj) in [
            ("plain", Objective::plain()),
            ("car_augmented", Objective::car(CarForm::Augmented, 10.0)),
            ("car_cda", Objective::car(CarForm::Cda, 10.0)),
        ] {
            group.bench_with_input(BenchmarkId::new(label, name), &exec, |b, &exec| {
                b.iter(|| batch_gradient(&model, &ds, black_box(&rows), &obj, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn audit(c: &mut Criterion) {
    let ds = generate_synthetic(2000, 2).unwrap();
    let config = TrainConfig {
        epochs: 1,
        lambda: LambdaMode::Off,
        ..TrainConfig::default()
    };
    let trained = train(&ds, &config, &ModelConfig::new(ds.schema().task())).unwrap();
    let mut group = c.benchmark_group("fairness_report_2000");
    group.sample_size(20);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| fairness_report(&trained, black_box(&ds), exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, gradients, audit);
criterion_main!(benches);
