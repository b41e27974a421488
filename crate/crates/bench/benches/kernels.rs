use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gda_bench::{patterned_matrix, patterned_tensor, recognition_set};
use gda_core::gda::train_gda;
use gda_core::hosvd::{hosvd, HosvdOptions};
use gda_core::{RankPolicy, TrainingConfig};
use std::hint::black_box;

fn mode_product(c: &mut Criterion) {
    let mut g = c.benchmark_group("mode_product");
    let t = patterned_tensor(&[32, 24, 10, 20]);
    for mode in 0..4 {
        let u = patterned_matrix(8, t.shape()[mode]);
        g.bench_with_input(BenchmarkId::from_parameter(mode), &mode, |b, &k| {
            b.iter(|| black_box(t.mode_product(&u, k).unwrap()))
        });
    }
    g.finish();
}

fn hosvd_bench(c: &mut Criterion) {
    let mut g = c.benchmark_group("hosvd");
    g.sample_size(20);
    for (name, shape) in [("32x32x40", vec![32, 32, 40]), ("64x48x10x20", vec![64, 48, 10, 20])] {
        let t = patterned_tensor(&shape);
        let exempt = shape.len() - 1;
        g.bench_function(name, |b| {
            b.iter(|| black_box(hosvd(&t, &HosvdOptions::new(RankPolicy::Threshold(0.9)).exempt([exempt])).unwrap()))
        });
    }
    g.finish();
}

fn train_bench(c: &mut Criterion) {
    let mut g = c.benchmark_group("train_gda");
    g.sample_size(10);
    for (name, shape) in [("16x16", vec![16, 16]), ("16x16x8", vec![16, 16, 8])] {
        let data = recognition_set(10, &shape);
        let cfg = TrainingConfig::default();
        g.bench_function(name, |b| b.iter(|| black_box(train_gda(&data, &cfg).unwrap())));
    }
    g.finish();
}

criterion_group!(benches, mode_product, hosvd_bench, train_bench);
criterion_main!(benches);
