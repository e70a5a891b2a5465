use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use comper::types::TransitionFeature;
use comper::TransitionMemoryIndex;

fn filled(rows: usize, dim: usize) -> (TransitionMemoryIndex, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(rows as u64);
    let mut index = TransitionMemoryIndex::new(dim);
    for _ in 0..rows {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        index.update_index(&TransitionFeature(v)).unwrap();
    }
    let q = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    (index, q)
}

fn scan(c: &mut Criterion) {
    let dim = 2 * 32 + 2;
    let mut group = c.benchmark_group("nearest");
    for rows in [1_000usize, 10_000, 100_000] {
        let (index, q) = filled(rows, dim);
        group.bench_with_input(BenchmarkId::new("sequential", rows), &rows, |b, _| {
            b.iter(|| index.nearest_seq(std::hint::black_box(&q)))
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", rows), &rows, |b, _| {
            b.iter(|| index.nearest_par(std::hint::black_box(&q)))
        });
    }
    group.finish();
}

criterion_group!(benches, scan);
criterion_main!(benches);
