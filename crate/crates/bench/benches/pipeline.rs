use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use dialprog_bench::fixture;
use dialprog_core::embedding::pool_dialogue;
use dialprog_core::gds::{fit_gds, fit_hdbscan, fit_kmeans};
use dialprog_core::progression::progression_curve_from_embeddings;
use dialprog_core::{ClusterMethod, GdsConfig, PoolingConfig, ProximityConfig};

fn pooling(c: &mut Criterion) {
    let f = fixture(50, 768, 1);
    let cfg = PoolingConfig::default();
    c.bench_function("pool 50 dialogues (768-d)", |b| {
        b.iter(|| {
            for u in &f.dialogues {
                black_box(pool_dialogue(u, &cfg).unwrap());
            }
        })
    });
}

fn clustering(c: &mut Criterion) {
    let f = fixture(300, 128, 2);
    let cfg = PoolingConfig::default();
    let x: Vec<Vec<f64>> = f.dialogues.iter().map(|u| pool_dialogue(u, &cfg).unwrap()).collect();
    let mut group = c.benchmark_group("clustering 300x128");
    group.sample_size(10);
    for k in [5, 21] {
        group.bench_with_input(BenchmarkId::new("kmeans n_init=10", k), &k, |b, &k| {
            b.iter(|| fit_kmeans(black_box(&x), k, 10, 7).unwrap())
        });
    }
    group.bench_function("hdbscan min_cluster_size=10", |b| b.iter(|| fit_hdbscan(black_box(&x), 10, None).unwrap()));
    group.finish();
}

fn curves(c: &mut Criterion) {
    let f = fixture(200, 128, 3);
    let cfg = GdsConfig {
        method: ClusterMethod::Kmeans { k: 21, n_init: 4 },
        ..GdsConfig::default()
    };
    let model = fit_gds(&cfg, &f.dialogues, &f.outcomes, 3).unwrap();
    let prox = ProximityConfig::default();
    c.bench_function("pf curve, one dialogue, k=21", |b| {
        b.iter(|| progression_curve_from_embeddings(&model, black_box(&f.dialogues[0]), &prox).unwrap())
    });
}

criterion_group!(benches, pooling, clustering, curves);
criterion_main!(benches);
