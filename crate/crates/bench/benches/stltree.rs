use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use stltree::primitives::{build_primitive_set, enumerate_time_params, precompute_table, reduce_by_symmetry};
use stltree::{robustness, solve_exact, SolveBudget};
use stltree_bench::{long_signal, naval, nested_formula, plateau, problem};

fn bench_robustness(c: &mut Criterion) {
    // Monitor every start time the trace covers.
    let formula = nested_formula();
    let mut group = c.benchmark_group("robustness");
    group.sample_size(20);
    for len in [300, 600, 1200] {
        let signal = long_signal(len);
        let last = signal.horizon() - formula.horizon();
        group.bench_with_input(BenchmarkId::from_parameter(len), &signal, |b, s| {
            b.iter(|| {
                (0..=last)
                    .map(|k| robustness(black_box(s), &formula, k).unwrap())
                    .sum::<f64>()
            })
        });
    }
    group.finish();
}

fn bench_table(c: &mut Criterion) {
    let data = naval(30);
    let mut group = c.benchmark_group("precompute_table");
    group.sample_size(10);
    for level in [1, 2] {
        let templates = reduce_by_symmetry(&build_primitive_set(level, data.dims())).unwrap();
        let mut thetas = enumerate_time_params(1, data.horizon(), 4, None);
        if level == 2 {
            thetas.extend(enumerate_time_params(2, data.horizon(), 4, Some(12)));
        }
        group.bench_function(BenchmarkId::new("naval", level), |b| {
            b.iter(|| precompute_table(&data, &templates, &thetas).unwrap())
        });
    }
    group.finish();
}

fn bench_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_exact");
    group.sample_size(10);
    let naval = problem(&naval(30), 2, 1, 2);
    group.bench_function("naval_depth2", |b| {
        b.iter(|| solve_exact(&naval, &SolveBudget::unlimited()).unwrap())
    });
    let waves = problem(&plateau(), 2, 1, 3);
    group.bench_function("plateau_depth2", |b| {
        b.iter(|| solve_exact(&waves, &SolveBudget::unlimited()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_robustness, bench_table, bench_solve);
criterion_main!(benches);
