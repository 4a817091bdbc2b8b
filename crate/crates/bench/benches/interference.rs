use criterion::{criterion_group, criterion_main, Criterion};
use lnoi_hom::hom::{
    coincidence_curve, coincidence_rate, port_distribution, simulate_counts, DetectorModel, PairStatistics, SourceModel,
};
use lnoi_hom_bench::{reproduction_state, uniform_grid};

fn enumeration(c: &mut Criterion) {
    let det = DetectorModel::new(0.95, 0.0);
    c.bench_function("port_distribution_two_pairs", |b| {
        b.iter(|| port_distribution(2, PairStatistics::Poissonian, 0.546, 0.98).unwrap())
    });
    c.bench_function("coincidence_rate", |b| {
        b.iter(|| coincidence_rate(0.009, PairStatistics::Thermal, 0.546, 0.98, &det).unwrap())
    });
    let state = reproduction_state();
    let delays = uniform_grid(-6.0, 6.0, 1001);
    c.bench_function("coincidence_curve_1001", |b| b.iter(|| coincidence_curve(&state, 0.546, &delays, true).unwrap()));
}

fn monte_carlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("monte_carlo");
    g.sample_size(10);
    let state = reproduction_state();
    let source = SourceModel::new(0.009, 100_000);
    let det = DetectorModel::new(0.95, 70.0);
    let delays = uniform_grid(-6.0, 6.0, 50);
    g.bench_function("simulate_counts_50x1e5", |b| {
        b.iter(|| simulate_counts(&state, 0.546, &source, &det, &delays, 7).unwrap())
    });
    g.finish();
}

criterion_group!(benches, enumeration, monte_carlo);
criterion_main!(benches);
