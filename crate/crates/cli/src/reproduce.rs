//! Every quantitative claim of the reference measurement, recomputed.

use std::io::Write;

use lnoi_hom::coupler::CouplerDevice;
use lnoi_hom::fit::{
    fabry_perot_loss, facet_reflectivity, fit_coupling_sinusoid, fit_gaussian_dip, fringe_contrast,
    propagate_visibility_uncertainty, sample_mean_std, synthetic_dip, synthetic_fringes, synthetic_series, DipGuess,
    InputPort, SinusoidGuess, UncertainValue,
};
use lnoi_hom::hom::{
    combined_visibility, hom_visibility_max, multi_pair_visibility_with, simulate_counts, DetectorModel,
    PairStatistics, SourceModel, TwoPhotonState,
};
use lnoi_hom::material::Polarization;
use lnoi_hom::mode::{
    build_cross_section_with, coupling_length_sweep, solve_modes, CrossSectionOptions, SolverConfig, WaveguideGeometry,
    DEFAULT_GRID_PITCH_NM,
};

use crate::report::Report;
use crate::scenarios::{linspace, Context, Outcome, RunError, RunResult};
use crate::schema::Params;

const MEASURED_RATIO: f64 = 0.546;
const MEASURED_RATIO_SIGMA: f64 = 0.038;
const SOURCE_VISIBILITY: f64 = 0.9801;
const PORT_COUPLING_LENGTHS_UM: [f64; 2] = [114.85, 110.87];
const MEAN_PAIRS: f64 = 0.009;
const CENTER_WAVELENGTH_NM: f64 = 1542.22;
const FILTER_BANDWIDTH_NM: f64 = 1.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub reference: String,
    pub computed: String,
    pub tolerance: String,
    pub status: Status,
}

fn status(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn within(name: &'static str, reference: f64, computed: f64, tol: f64) -> Check {
    Check {
        name,
        reference: format!("{reference}"),
        computed: format!("{computed:.6}"),
        tolerance: format!("+-{tol}"),
        status: status((computed - reference).abs() <= tol),
    }
}

fn bracket(name: &'static str, lo: f64, hi: f64, computed: f64) -> Check {
    Check {
        name,
        reference: format!("[{lo}, {hi}]"),
        computed: format!("{computed:.6}"),
        tolerance: "inside".into(),
        status: status((lo..=hi).contains(&computed)),
    }
}

fn errored(name: &'static str, reference: &str, e: impl std::fmt::Display) -> Check {
    Check {
        name,
        reference: reference.into(),
        computed: format!("error: {e}"),
        tolerance: "-".into(),
        status: Status::Fail,
    }
}

fn analytic_checks() -> Vec<Check> {
    let mut out = vec![
        within("visibility_max_balanced", 1.0, hom_visibility_max(0.5), 0.0),
        within("visibility_max_measured_ratio", 0.9832, hom_visibility_max(MEASURED_RATIO), 2e-4),
        within("combined_visibility", 0.9636, combined_visibility(SOURCE_VISIBILITY, MEASURED_RATIO), 5e-4),
    ];
    match sample_mean_std(&PORT_COUPLING_LENGTHS_UM) {
        Ok((mean, std)) => {
            out.push(within("coupling_length_mean_um", 112.86, mean, 0.005));
            out.push(within("coupling_length_spread_um", 2.82, std, 0.005));
        }
        Err(e) => out.push(errored("coupling_length_mean_um", "112.86", e)),
    }
    match propagate_visibility_uncertainty(
        UncertainValue::new(MEASURED_RATIO, MEASURED_RATIO_SIGMA),
        UncertainValue::exact(1.0),
    ) {
        Ok(v) => out.push(within("visibility_uncertainty", 0.028, v.sigma, 0.3 * 0.028)),
        Err(e) => out.push(errored("visibility_uncertainty", "0.028", e)),
    }
    out
}

fn fit_checks(seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    let truth = SinusoidGuess { coupling_length_um: 114.85, bend_offset_um: 20.0, amplitude: 1.0, offset: 0.0 };
    let lc = synthetic_series(truth, &linspace(30.0, 580.0, 12), 0.01, seed, InputPort::A)
        .and_then(|s| fit_coupling_sinusoid(&s, None))
        .and_then(|f| f.value("coupling_length_um"));
    out.push(match lc {
        Ok(lc) => within("coupling_fit_roundtrip_um", 114.85, lc, 0.01 * 114.85),
        Err(e) => errored("coupling_fit_roundtrip_um", "114.85", e),
    });

    let dip = DipGuess { visibility: 0.935, center_ps: 0.0, width_ps: 1.17, baseline: 1.0 };
    let v = synthetic_dip(dip, &linspace(-6.0, 6.0, 50))
        .and_then(|s| fit_gaussian_dip(&s, None))
        .and_then(|f| f.value("visibility"));
    out.push(match v {
        Ok(v) => within("dip_fit_roundtrip", 0.935, v, 1e-4),
        Err(e) => errored("dip_fit_roundtrip", "0.935", e),
    });

    let r = facet_reflectivity(1.9);
    let curve = synthetic_fringes(r, 4.85, 1.0, 256, 4);
    let alpha = fringe_contrast(&curve.iter().map(|c| c.1).collect::<Vec<_>>())
        .and_then(|k| fabry_perot_loss(k, r, 1.0))
        .map(|l| l.alpha_db_per_cm);
    out.push(match alpha {
        Ok(a) => within("fabry_perot_loss_db_per_cm", 4.85, a, 0.002 * 4.85),
        Err(e) => errored("fabry_perot_loss_db_per_cm", "4.85", e),
    });
    out
}

fn counting_checks(pulses: u64, seed: u64, ctx: &Context, report: &mut Report) -> RunResult<Vec<Check>> {
    let state = TwoPhotonState::degenerate(CENTER_WAVELENGTH_NM, FILTER_BANDWIDTH_NM, 1.0)
        .with_source_visibility(SOURCE_VISIBILITY);
    let source = SourceModel::new(MEAN_PAIRS, pulses);
    let detectors = DetectorModel::new(0.95, 0.0);
    let delays = linspace(-6.0, 6.0, 50);
    ctx.note(&format!("simulating {} points x {pulses} pulses", delays.len()));
    let scan = simulate_counts(&state, MEASURED_RATIO, &source, &detectors, &delays, seed)?;
    scan.write_csv(ctx.create("reproduction_counts.csv", report)?)?;
    let fit = match fit_gaussian_dip(&scan, None) {
        Ok(f) => f,
        Err(e) => return Ok(vec![errored("raw_visibility_bracket", "[0.93, 0.985]", e)]),
    };
    let (v, sigma) = (fit.value("visibility")?, fit.sigma("visibility")?);
    let mut out = vec![bracket("raw_visibility_bracket", 0.93, 0.985, v)];
    let predicted = multi_pair_visibility_with(
        MEAN_PAIRS,
        PairStatistics::Poissonian,
        MEASURED_RATIO,
        state.spectral_overlap(0.0),
        &detectors,
    )?;
    let mut c = within("raw_visibility_vs_enumeration", predicted, v, 3.0 * sigma);
    c.reference = format!("{predicted:.6}");
    c.tolerance = format!("+-{:.6} (3 sigma)", 3.0 * sigma);
    out.push(c);
    Ok(out)
}

fn solver_checks(ctx: &Context) -> Vec<Check> {
    let mut out = Vec::new();
    let single = WaveguideGeometry::lnoi_single();
    let mut guided = Vec::new();
    for pol in [Polarization::TeLike, Polarization::TmLike] {
        ctx.note(&format!("solving single rib, {pol:?}"));
        let opts = CrossSectionOptions { polarization: pol, ..CrossSectionOptions::default() };
        let n = build_cross_section_with(&single, 1.55, DEFAULT_GRID_PITCH_NM, &opts)
            .and_then(|m| solve_modes(&m, 1.55, 3))
            .map(|m| m.len());
        guided.push(n);
    }
    out.push(match (&guided[0], &guided[1]) {
        (Ok(te), Ok(tm)) => Check {
            name: "single_mode_rib",
            reference: "1 guided mode per polarization".into(),
            computed: format!("TE {te}, TM {tm}"),
            tolerance: "exact".into(),
            status: status(*te == 1 && *tm == 1),
        },
        (Err(e), _) | (_, Err(e)) => errored("single_mode_rib", "1", e),
    });

    ctx.note("solving coupler supermodes at 1540, 1550 and 1560 nm");
    let coupler = WaveguideGeometry::lnoi_coupler();
    let pairs = coupling_length_sweep(
        &coupler,
        &[1.54, 1.55, 1.56],
        DEFAULT_GRID_PITCH_NM,
        &CrossSectionOptions::default(),
        &SolverConfig::default(),
    );
    let [a, mid, b]: [_; 3] = pairs.try_into().expect("three wavelengths");
    out.push(match mid.and_then(|p| p.coupling_length_um()) {
        Ok(lc) => bracket("coupling_length_band_um", 90.0, 180.0, lc),
        Err(e) => errored("coupling_length_band_um", "[90, 180]", e),
    });

    let device = match (a, b) {
        (Ok(a), Ok(b)) => CouplerDevice::from_delta_n_samples((1540.0, a.delta_n()), (1560.0, b.delta_n())),
        (Err(e), _) | (_, Err(e)) => Err(e),
    };
    let scan = |order: u32| -> lnoi_hom::Result<(f64, f64)> {
        let d = device.as_ref().map_err(|e| lnoi_hom::Error::Numerical(e.to_string()))?;
        let d = d.with_interaction_length(d.length_for_ratio(0.5, order)?);
        let dev = d.bandwidth_scan(1540.0, 1560.0, 0.1)?.iter().map(|(_, e)| (e - 0.5).abs()).fold(0.0, f64::max);
        Ok((dev, d.ratio_bandwidth(0.01, 100.0)?))
    };
    match (scan(0), scan(1)) {
        (Ok((dev0, bw0)), Ok((_, bw1))) => {
            let mut c = bracket("order0_ratio_deviation_1540_1560", 0.0, 0.01, dev0);
            c.reference = "< 0.01".into();
            c.tolerance = "strict".into();
            c.status = status(dev0 < 0.01);
            out.push(c);
            out.push(Check {
                name: "order1_bandwidth_narrower_nm",
                reference: format!("< order-0 {bw0:.3}"),
                computed: format!("{bw1:.3}"),
                tolerance: "strict".into(),
                status: status(bw1 < bw0),
            });
        }
        (Err(e), _) | (_, Err(e)) => out.push(errored("order0_ratio_deviation_1540_1560", "< 0.01", e)),
    }
    out
}

pub fn run(p: &Params, ctx: &Context) -> RunResult<Outcome> {
    let pulses = u64::try_from(p.int("pulses_per_point")).ok().filter(|&n| n > 0).ok_or_else(|| {
        RunError::Config(crate::schema::ConfigError::Invalid("pulses_per_point must be positive".into()))
    })?;
    let mut report = Report::new("reproduce-paper", ctx.seed);
    let mut checks = analytic_checks();
    checks.extend(fit_checks(ctx.seed));
    checks.extend(counting_checks(pulses, ctx.seed, ctx, &mut report)?);
    if p.flag("include_mode_solver") {
        checks.extend(solver_checks(ctx));
    } else {
        for name in ["single_mode_rib", "coupling_length_band_um", "order0_ratio_deviation_1540_1560"] {
            checks.push(Check {
                name,
                reference: "-".into(),
                computed: "-".into(),
                tolerance: "-".into(),
                status: Status::Skip,
            });
        }
    }

    println!("{:<4}  {:<34} {:>30} {:>22} {:>26}", "", "check", "reference", "computed", "tolerance");
    for c in &checks {
        println!("{:<4}  {:<34} {:>30} {:>22} {:>26}", c.status.label(), c.name, c.reference, c.computed, c.tolerance);
    }
    let mut w = ctx.create("reproduction_table.csv", &mut report)?;
    let path = ctx.out.join("reproduction_table.csv");
    let io = |source| RunError::Io { path: path.clone(), source };
    writeln!(w, "check,reference,computed,tolerance,status").map_err(io)?;
    for c in &checks {
        let field = |s: &str| if s.contains(',') { format!("\"{s}\"") } else { s.to_owned() };
        writeln!(
            w,
            "{},{},{},{},{}",
            c.name,
            field(&c.reference),
            field(&c.computed),
            field(&c.tolerance),
            c.status.label()
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)?;

    let count = |s: Status| checks.iter().filter(|c| c.status == s).count() as i128;
    report.int("checks", checks.len() as i128);
    report.int("passed", count(Status::Pass));
    report.int("failed", count(Status::Fail));
    report.int("skipped", count(Status::Skip));
    for c in &checks {
        report.text(&format!("check_{}", c.name), c.status.label());
    }
    let passed = count(Status::Fail) == 0;
    Ok(Outcome { report, passed })
}
