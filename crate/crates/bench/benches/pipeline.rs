use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;
use threecp_bench::{random_sequences, random_walks};
use threecp_core::preprocess::standardize_set;
use threecp_core::{
    analyze, build_index, default_lerp, detect_all, group_same_position, AnalyzeOptions,
    DiscretizeMethod, Discretizer, ScanOrder,
};

const M: usize = 20;
const K: usize = 12;
const SPL: usize = 5;

fn index_and_detect(c: &mut Criterion) {
    let mut g = c.benchmark_group("index_detect");
    g.sample_size(10);
    for n in [5_000, 10_000, 20_000] {
        let seqs = random_sequences(M, n, K, 1);
        let lerp = default_lerp(M * n, K);
        g.throughput(Throughput::Elements((M * n) as u64));
        g.bench_with_input(BenchmarkId::new("build", n), &seqs, |b, s| {
            b.iter(|| build_index(black_box(s), K, SPL, lerp, 1).unwrap())
        });
        let idx = build_index(&seqs, K, SPL, lerp, 1).unwrap();
        g.bench_with_input(BenchmarkId::new("detect", n), &idx, |b, idx| {
            b.iter(|| detect_all(black_box(idx), 1).unwrap())
        });
    }
    g.finish();
}

fn commonality(c: &mut Criterion) {
    let mut g = c.benchmark_group("analyze");
    g.sample_size(10);
    let n = 5_000;
    let curves = standardize_set(&random_walks(M, n, 2), true).unwrap();
    let d = Discretizer::fit(DiscretizeMethod::EqualWidth, K, &[], 3.0).unwrap();
    let seqs: Vec<_> = curves.iter().map(|c| d.discretize_curve(c)).collect();
    let idx = build_index(&seqs, K, 3, default_lerp(M * n, K), 1).unwrap();
    let groups = group_same_position(&detect_all(&idx, 1).unwrap());
    for order in [ScanOrder::LengthAsc, ScanOrder::PositionAsc] {
        g.bench_function(BenchmarkId::new("scan", order), |b| {
            b.iter(|| analyze(black_box(&groups), order, n, M, &AnalyzeOptions::default()).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, index_and_detect, commonality);
criterion_main!(benches);
