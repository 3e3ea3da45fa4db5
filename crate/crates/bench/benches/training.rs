use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use diffboost::{class_scores, fit_density, train, Topology, TrainConfig};
use diffboost_bench::synthetic;

fn density(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit_density");
    for n in [300, 3000] {
        let data = synthetic(n, 9);
        let topology = Topology::uniform(&data.schema, 7);
        group.bench_with_input(BenchmarkId::from_parameter(n), &data, |b, data| {
            b.iter(|| fit_density(black_box(data), &topology).unwrap())
        });
    }
    group.finish();
}

fn training(c: &mut Criterion) {
    let mut group = c.benchmark_group("train");
    group.sample_size(20);
    for n in [300, 3000] {
        let data = synthetic(n, 9);
        let config = TrainConfig {
            max_rounds: 50,
            ..TrainConfig::new(Topology::uniform(&data.schema, 7))
        };
        group.bench_with_input(BenchmarkId::from_parameter(n), &data, |b, data| {
            b.iter(|| train(black_box(data), config.clone()).unwrap())
        });
    }
    group.finish();
}

fn scoring(c: &mut Criterion) {
    let data = synthetic(1000, 21);
    let (model, _) = train(&data, TrainConfig::new(Topology::uniform(&data.schema, 9))).unwrap();
    c.bench_function("class_scores/21 attributes", |b| {
        let mut i = 0;
        b.iter(|| {
            i = (i + 1) % data.len();
            class_scores(&model, black_box(&data.examples[i].values)).unwrap()
        })
    });
}

criterion_group!(benches, density, training, scoring);
criterion_main!(benches);
