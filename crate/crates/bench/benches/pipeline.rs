use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use tha_bench::{countermeasure_catalog, sample_dir, synthetic_scheme};
use tha_core::planner::{load_countermeasure_catalog, search_min_stack, PlanConstraints, SearchStrategy};
use tha_core::scheme::{composite_transmittance, load_scheme};
use tha_core::security::{evaluate, ProbeBudget, SecurityThresholds};
use tha_core::spectrum::WavelengthGrid;

fn composite(c: &mut Criterion) {
    let grid = WavelengthGrid::analysis_band();
    let mut group = c.benchmark_group("composite");
    for n in [2usize, 8, 32] {
        let scheme = synthetic_scheme(n, &grid);
        group.bench_with_input(BenchmarkId::from_parameter(n), &scheme, |b, s| {
            b.iter(|| composite_transmittance(black_box(s), &grid).unwrap())
        });
    }
    group.finish();
}

fn evaluate_band(c: &mut Criterion) {
    let grid = WavelengthGrid::analysis_band();
    let scheme = load_scheme(&sample_dir().join("alice.json"), None, &grid).unwrap();
    let t = composite_transmittance(&scheme, &grid).unwrap();
    let budget = ProbeBudget::default();
    let thresholds = SecurityThresholds::default();
    c.bench_function("evaluate/alice", |b| b.iter(|| evaluate(black_box(&t), &budget, &thresholds).unwrap()));
}

fn search(c: &mut Criterion) {
    let grid = WavelengthGrid::analysis_band();
    let budget = ProbeBudget::default();
    let constraints = PlanConstraints::default();
    let alice = load_scheme(&sample_dir().join("alice.json"), None, &grid).unwrap();
    let sample_catalog = load_countermeasure_catalog(&sample_dir().join("countermeasures/catalog.json"), &grid).unwrap();
    let mut group = c.benchmark_group("search");
    group.sample_size(20);
    group.bench_function("exhaustive/sample", |b| {
        b.iter(|| {
            search_min_stack(&sample_catalog, &alice, &budget, &constraints, &grid, Some(SearchStrategy::Exhaustive))
                .unwrap()
        })
    });
    let wide = countermeasure_catalog(6, 3, &grid);
    group.bench_function("exhaustive/6x3", |b| {
        b.iter(|| search_min_stack(&wide, &alice, &budget, &constraints, &grid, Some(SearchStrategy::Exhaustive)).unwrap())
    });
    group.bench_function("greedy/6x3", |b| {
        b.iter(|| search_min_stack(&wide, &alice, &budget, &constraints, &grid, Some(SearchStrategy::Greedy)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, composite, evaluate_band, search);
criterion_main!(benches);
