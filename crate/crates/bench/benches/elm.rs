use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use elm_ctr::metrics::auc;
use elm_ctr::{hash_encode, ActivationKind, Dataset, NormalEqAccumulator, RandomLayer};
use elm_ctr_bench::{hashed, planted};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn encode(c: &mut Criterion) {
    let (data, schema) = planted(10_000);
    let mut g = c.benchmark_group("hash_encode");
    g.throughput(Throughput::Elements(data.records.len() as u64));
    g.bench_function("10k_records", |b| {
        b.iter(|| data.records.iter().map(|r| hash_encode(r, &schema, 1 << 14, 0).indices.len()).sum::<usize>())
    });
    g.finish();
}

fn hidden_and_accumulate(c: &mut Criterion) {
    let dims = 1 << 12;
    let data = hashed(2_000, dims);
    let batch = data.batch(0..data.len());
    let targets = data.targets(0..data.len());
    let mut g = c.benchmark_group("hidden_accumulate");
    g.throughput(Throughput::Elements(data.len() as u64));
    for hidden in [250, 1000] {
        let layer = RandomLayer::random(dims, hidden, 0, ActivationKind::Relu);
        g.bench_with_input(BenchmarkId::from_parameter(hidden), &layer, |b, layer| {
            b.iter(|| {
                let h = layer.hidden(&batch).unwrap();
                let mut acc = NormalEqAccumulator::new(hidden, 1);
                acc.accumulate(&h, &targets).unwrap();
                acc.count()
            })
        });
    }
    g.finish();
}

fn ridge_solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("ridge_solve");
    g.sample_size(10);
    for hidden in [250, 1000] {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = DMatrix::from_fn(2 * hidden, hidden, |_, _| rng.random_range(-1.0..1.0));
        let y = DMatrix::from_fn(2 * hidden, 1, |_, _| rng.random_range(0.0..1.0));
        let mut acc = NormalEqAccumulator::new(hidden, 1);
        acc.accumulate(&h, &y).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(hidden), &acc, |b, acc| {
            b.iter(|| acc.ridge_solve(1e-2).unwrap())
        });
    }
    g.finish();
}

fn metrics(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let scores: Vec<f64> = (0..100_000).map(|_| rng.random()).collect();
    let labels: Vec<u8> = scores.iter().map(|s| u8::from(rng.random::<f64>() < *s)).collect();
    let mut g = c.benchmark_group("metrics");
    g.throughput(Throughput::Elements(scores.len() as u64));
    g.bench_function("auc_100k", |b| b.iter(|| auc(&scores, &labels).unwrap()));
    g.finish();
}

criterion_group!(benches, encode, hidden_and_accumulate, ridge_solve, metrics);
criterion_main!(benches);
