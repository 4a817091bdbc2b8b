use criterion::{criterion_group, criterion_main, Criterion};
use lnoi_hom::coupler::CouplerDevice;
use lnoi_hom::mode::{build_cross_section, solve_modes, supermode_coupling_length, WaveguideGeometry};

fn modes(c: &mut Criterion) {
    let mut g = c.benchmark_group("mode_solver");
    g.sample_size(10);
    let single = WaveguideGeometry::lnoi_single();
    g.bench_function("single_rib_40nm", |b| {
        b.iter(|| {
            let map = build_cross_section(&single, 1.55, 40.0).unwrap();
            solve_modes(&map, 1.55, 2).unwrap()
        })
    });
    let coupler = WaveguideGeometry::lnoi_coupler();
    g.bench_function("coupler_supermodes_20nm", |b| b.iter(|| supermode_coupling_length(&coupler, 1.55).unwrap()));
    g.finish();
}

fn coupler(c: &mut Criterion) {
    let d = CouplerDevice::new(112.86, 1550.0).unwrap().with_dispersion_slope(1.44e-3).with_interaction_length(56.43);
    c.bench_function("bandwidth_scan_4001", |b| b.iter(|| d.bandwidth_scan(1300.0, 1700.0, 0.1).unwrap()));
    c.bench_function("ratio_bandwidth", |b| b.iter(|| d.ratio_bandwidth(0.01, 100.0).unwrap()));
}

criterion_group!(benches, modes, coupler);
criterion_main!(benches);
