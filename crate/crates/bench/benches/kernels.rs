use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use graphstein::coupling::GraphCoupling;
use graphstein::graph::{count_four_cycles, gen_gnp};
use graphstein::homogeneity::{confidence_set_from_counts, GraphCounts};
use graphstein::permstat::{inversions, Permutation};
use graphstein::{rng, SearchDomain};

fn four_cycles(c: &mut Criterion) {
    let mut group = c.benchmark_group("count_four_cycles");
    group.sample_size(10);
    for n in [250, 500, 1000, 2000] {
        let g = gen_gnp(n, 0.5, 1).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, g| b.iter(|| count_four_cycles(black_box(g))));
    }
    group.finish();
}

fn generation(c: &mut Criterion) {
    let mut group = c.benchmark_group("gen_gnp");
    for n in [200, 1000] {
        group.bench_function(BenchmarkId::from_parameter(n), |b| b.iter(|| gen_gnp(black_box(n), 0.3, 7).unwrap()));
    }
    group.finish();
}

fn confidence(c: &mut Criterion) {
    let counts = GraphCounts::of(&gen_gnp(400, 0.4, 3).unwrap()).unwrap();
    c.bench_function("confidence_set/n=400", |b| {
        b.iter(|| confidence_set_from_counts(black_box(&counts), 0.05, SearchDomain::default()).unwrap())
    });
}

fn conditioner(c: &mut Criterion) {
    let mut group = c.benchmark_group("graph_conditioner");
    group.sample_size(10);
    for n in [20, 40] {
        let coupling = GraphCoupling::new(n, 0.5).unwrap();
        let g = gen_gnp(n, 0.5, 5).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, g| {
            b.iter(|| coupling.moments_for_graph(black_box(g)))
        });
    }
    group.finish();
}

fn permutations(c: &mut Criterion) {
    let pi = Permutation::random(10_000, &mut rng::from_seed(2));
    c.bench_function("inversions/n=10000", |b| b.iter(|| inversions(black_box(&pi))));
}

criterion_group!(benches, four_cycles, generation, confidence, conditioner, permutations);
criterion_main!(benches);
