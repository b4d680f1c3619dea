use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spst::{
    distance_matrix_with, estimate_tree, generate_sequence, Alphabet, BetaParam, EstimatedModel,
    EstimatorConfig, Execution, SparseContext, SparseContextTree,
};

fn source(alphabet: &Alphabet, shift: usize) -> EstimatedModel {
    let n = alphabet.len();
    let half: String = alphabet.symbols()[..n / 2].iter().collect();
    let rest: String = alphabet.symbols()[n / 2..].iter().collect();
    let peaked = |at: usize| {
        let mut p = vec![0.2 / (n - 1) as f64; n];
        p[at % n] = 0.8;
        let s: f64 = p.iter().sum();
        p.iter().map(|x| x / s).collect::<Vec<_>>()
    };
    let entries = vec![
        (SparseContext::parse(alphabet, &half).unwrap(), peaked(shift)),
        (SparseContext::parse(alphabet, &rest).unwrap(), peaked(shift + 3)),
    ];
    EstimatedModel::new(alphabet.clone(), entries).unwrap()
}

fn sequences(alphabet: &Alphabet, count: usize, len: usize) -> Vec<String> {
    (0..count)
        .map(|i| generate_sequence(&source(alphabet, i % 4), len, i as u64))
        .collect()
}

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bench_training(c: &mut Criterion) {
    let alphabet = Alphabet::from_str_symbols("ACDEFGHIKLMNPQRSTVWY").unwrap();
    let seqs = sequences(&alphabet, 16, 2_000);
    let cfg = EstimatorConfig::default();
    let mut group = c.benchmark_group("train");
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| exec.map_slice(black_box(&seqs), |s| estimate_tree(s, &alphabet, &cfg).unwrap()))
        });
    }
    group.finish();
}

fn bench_matrix(c: &mut Criterion) {
    let alphabet = Alphabet::from_str_symbols("ACDEFGHIKLMNPQRSTVWY").unwrap();
    let cfg = EstimatorConfig {
        keep_threshold: 0.0,
        ..Default::default()
    };
    let mut group = c.benchmark_group("distance_matrix");
    for n in [8, 32] {
        let trees: Vec<(String, SparseContextTree)> = sequences(&alphabet, n, 1_500)
            .iter()
            .enumerate()
            .map(|(i, s)| (format!("s{i}"), estimate_tree(s, &alphabet, &cfg).unwrap().tree().clone()))
            .collect();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &trees, |b, trees| {
                b.iter(|| distance_matrix_with(black_box(trees), BetaParam::SHANNON, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_training, bench_matrix
}
criterion_main!(benches);
