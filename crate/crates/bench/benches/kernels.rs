use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use cars_infer::model::{ForwardModel, HilbertBoundary, HilbertTransformer};
use cars_infer::narrowing::{narrow, NarrowingConfig};
use cars_infer::wavelet::{dwt_multilevel, BoundaryMode};
use cars_infer::{ErrorFunctionEngine, MeasuredSpectrum};
use cars_infer_bench::fixture;

fn likelihood(c: &mut Criterion) {
    let sim = fixture();
    let engine = ErrorFunctionEngine::from_signal(sim.grid, &sim.reference, 34, 8, Default::default()).unwrap();
    let measured = MeasuredSpectrum::new(sim.grid, sim.values.clone(), sim.truth.noise_sd.powi(2), 0.0)
        .unwrap()
        .with_edge_mask(16)
        .unwrap();
    let model = ForwardModel::new(&measured, &engine).unwrap();
    let mut ws = model.workspace().unwrap();
    c.bench_function("log_likelihood_3_lines_1024", |b| {
        b.iter(|| model.log_likelihood(&mut ws, black_box(&sim.truth.params)))
    });
    let mut hilbert = HilbertTransformer::new(1024, HilbertBoundary::ZeroPadded).unwrap();
    let mut out = vec![0.0; 1024];
    c.bench_function("hilbert_1024", |b| {
        b.iter(|| hilbert.transform_into(black_box(&sim.values), &mut out))
    });
}

fn wavelet(c: &mut Criterion) {
    let sim = fixture();
    c.bench_function("dwt_sym34_1024_8_levels", |b| {
        b.iter(|| dwt_multilevel(black_box(&sim.values), 34, 8, BoundaryMode::Periodic).unwrap())
    });
}

fn narrowing(c: &mut Criterion) {
    let sim = fixture();
    let cfg = NarrowingConfig::default();
    let mut group = c.benchmark_group("narrowing");
    group.sample_size(10);
    group.bench_function("sweep_4950_candidates", |b| {
        b.iter(|| narrow(black_box(&sim.truth.signal), &sim.grid, &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, likelihood, wavelet, narrowing);
criterion_main!(benches);
