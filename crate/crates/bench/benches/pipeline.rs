use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use fairsel_bench::{canonical_dataset, canonical_features, canonical_split};
use fairsel_core::dataset::{generate_synthetic, SyntheticSpec};
use fairsel_core::losses::{FairnessConfig, FairnessMode};
use fairsel_core::metrics::{compute_run_gains, CareerWeights};
use fairsel_core::nn::{init_model, Mat};
use fairsel_core::selector::{score_all, select_top};
use fairsel_core::trainer::{train, TrainConfig};
use fairsel_core::ProtectedAttr;

fn bench_generator(c: &mut Criterion) {
    let spec = SyntheticSpec::default();
    c.bench_function("generate_synthetic_530", |b| {
        b.iter(|| generate_synthetic(black_box(&spec), 7).unwrap())
    });
}

fn bench_forward(c: &mut Criterion) {
    let dataset = canonical_dataset(7);
    let fm = canonical_features(&dataset);
    let mut model = init_model(fm.n_cols(), 64, 32, 1).unwrap();
    let x = Mat::from_rows(fm.n_rows(), fm.n_cols(), fm.rows.clone());
    // Warm running statistics once.
    model.forward_train(&x).unwrap();
    c.bench_function("forward_eval_530x10", |b| {
        b.iter(|| model.forward_eval(black_box(&x)).unwrap())
    });
    c.bench_function("forward_backward_batch32", |b| {
        let xb = Mat::from_rows(32, fm.n_cols(), fm.rows[..32 * fm.n_cols()].to_vec());
        b.iter(|| {
            let (probs, cache) = model.forward_train(black_box(&xb)).unwrap();
            let dl: Vec<f64> = probs.iter().map(|p| p - 0.5).collect();
            model.backward(&cache, &dl).unwrap()
        })
    });
}

fn bench_training(c: &mut Criterion) {
    let dataset = canonical_dataset(7);
    let fm = canonical_features(&dataset);
    let (train_fm, val_fm) = canonical_split(&fm, 7);
    let fairness = FairnessConfig {
        lambda: 3.0,
        w_race: 0.32,
        w_country: 0.68,
        mode: FairnessMode::RaceOnly,
    };
    let mut config = TrainConfig::with_fairness(fairness, 7);
    config.epochs = 5;
    config.patience = 5;
    c.bench_function("train_5_epochs_race_only", |b| {
        b.iter(|| train(black_box(&train_fm), black_box(&val_fm), &config).unwrap())
    });
}

fn bench_selection_and_metrics(c: &mut Criterion) {
    let dataset = canonical_dataset(7);
    let fm = canonical_features(&dataset);
    let mut model = init_model(fm.n_cols(), 64, 32, 1).unwrap();
    let x = Mat::from_rows(fm.n_rows(), fm.n_cols(), fm.rows.clone());
    model.forward_train(&x).unwrap();
    let scores = score_all(&model, &fm).unwrap();
    c.bench_function("select_top_351_of_530", |b| {
        b.iter(|| select_top(black_box(&scores), 351).unwrap())
    });

    let selection = select_top(&scores, 351).unwrap();
    let baseline = select_top(&scores, 351).unwrap();
    let weights = CareerWeights::from_dataset(&dataset.papers).unwrap();
    let selected: Vec<_> = selection
        .selected
        .iter()
        .map(|id| dataset.paper(id).unwrap())
        .collect();
    let base: Vec<_> = baseline
        .selected
        .iter()
        .map(|id| dataset.paper(id).unwrap())
        .collect();
    let attrs = [ProtectedAttr::Race, ProtectedAttr::Country];
    c.bench_function("run_gains_530", |b| {
        b.iter(|| {
            compute_run_gains(
                black_box(&selected),
                black_box(&base),
                &dataset.papers,
                &attrs,
                &weights,
            )
            .unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_generator,
    bench_forward,
    bench_training,
    bench_selection_and_metrics
);
criterion_main!(benches);
