use criterion::{criterion_group, criterion_main, Criterion};
use lnoi_hom::fit::{
    fit_coupling_sinusoid, fit_gaussian_dip, sample_visibility_uncertainty, synthetic_dip_counts, synthetic_series,
    DipGuess, InputPort, SinusoidGuess, UncertainValue,
};
use lnoi_hom_bench::uniform_grid;

fn fits(c: &mut Criterion) {
    let truth = SinusoidGuess { coupling_length_um: 114.85, bend_offset_um: 20.0, amplitude: 1.0, offset: 0.0 };
    let series = synthetic_series(truth, &uniform_grid(30.0, 580.0, 12), 0.01, 1, InputPort::A).unwrap();
    c.bench_function("fit_coupling_sinusoid", |b| b.iter(|| fit_coupling_sinusoid(&series, None).unwrap()));

    let dip = DipGuess { visibility: 0.935, center_ps: 0.0, width_ps: 1.17, baseline: 2000.0 };
    let scan = synthetic_dip_counts(dip, &uniform_grid(-6.0, 6.0, 50), 1).unwrap();
    c.bench_function("fit_gaussian_dip", |b| b.iter(|| fit_gaussian_dip(&scan, None).unwrap()));

    let eta = UncertainValue::new(0.546, 0.038);
    let src = UncertainValue::new(0.9801, 0.0024);
    c.bench_function("visibility_sampling_1e4", |b| {
        b.iter(|| sample_visibility_uncertainty(eta, src, 10_000, 3).unwrap())
    });
}

criterion_group!(benches, fits);
criterion_main!(benches);
