//! Scalar evaluation cost against N: direct index on uniform partitions,
//! binary search on optimized ones.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use polylin::eval::{EvalMode, Evaluator};
use polylin::fit;
use polylin::partition::{build_distribution, partition_from_distribution};
use polylin::{builtins, Partition};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SIZES: [usize; 5] = [31, 63, 127, 255, 511];

fn scalar_eval(c: &mut Criterion) {
    let f = builtins::gaussian(0.0, 4.0).unwrap();
    let dist = build_distribution(&f, 0.0, 4.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let xs: Vec<f64> = (0..4096).map(|_| rng.random_range(0.0..=4.0)).collect();

    let mut g = c.benchmark_group("evaluate");
    g.throughput(Throughput::Elements(xs.len() as u64));
    for n in SIZES {
        let uniform = Evaluator::new(fit::interpolant(&f, &Partition::uniform(0.0, 4.0, n).unwrap()).unwrap());
        let uniform_bs = Evaluator::with_mode(uniform.source().clone(), EvalMode::BinarySearch).unwrap();
        let opt = Evaluator::new(fit::interpolant(&f, &partition_from_distribution(&dist, n).unwrap()).unwrap());
        for (name, e) in [
            ("uniform_direct", &uniform),
            ("uniform_binary", &uniform_bs),
            ("optimized_binary", &opt),
        ] {
            g.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| {
                    let mut acc = 0.0;
                    for &x in &xs {
                        acc += e.evaluate(black_box(x)).unwrap();
                    }
                    acc
                })
            });
        }
    }
    g.finish();
}

criterion_group!(benches, scalar_eval);
criterion_main!(benches);
