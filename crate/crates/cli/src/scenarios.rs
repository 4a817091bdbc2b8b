//! One runner per scenario. Parameter problems surface as `RunError::Config`
//! before any heavy work starts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use lnoi_hom::coupler::{write_bandwidth_csv, CouplerDevice};
use lnoi_hom::fit::{
    fabry_perot_loss, facet_reflectivity, fit_coupling_sinusoid, fit_gaussian_dip, fringe_contrast, lossless_contrast,
    normalized_by_baseline, synthetic_dip, synthetic_dip_counts, synthetic_fringes, synthetic_series, DipGuess,
    FitResult, InputPort, PowerRatioSeries, SinusoidGuess,
};
use lnoi_hom::hom::{
    coincidence_curve, combined_visibility, hom_visibility_max, multi_pair_visibility_with, simulate_counts,
    single_pair_visibility, DelayLine, DetectorModel, PairStatistics, SourceModel, StagePass, TwoPhotonState,
    GAUSSIAN_FWHM_PER_SIGMA,
};
use lnoi_hom::material::Polarization;
use lnoi_hom::mode::{
    build_cross_section_with, coupling_length_from_delta_n, solve_modes_with, supermodes_with, write_mode_csv,
    CrossSectionOptions, Parity, SolverConfig, WaveguideGeometry,
};
use thiserror::Error;

use crate::report::Report;
use crate::schema::{ConfigError, Params, Scenario};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] lnoi_hom::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

pub type RunResult<T> = Result<T, RunError>;

pub struct Context {
    pub out: PathBuf,
    pub seed: u64,
    pub verbose: bool,
}

impl Context {
    pub fn note(&self, msg: &str) {
        if self.verbose {
            eprintln!("[lnoi-hom] {msg}");
        }
    }

    /// Opens `name` in the output directory and records it in the report.
    pub fn create(&self, name: &str, report: &mut Report) -> RunResult<BufWriter<File>> {
        let path = self.out.join(name);
        let f = File::create(&path).map_err(|source| RunError::Io { path, source })?;
        report.file(name);
        Ok(BufWriter::new(f))
    }
}

pub struct Outcome {
    pub report: Report,
    pub passed: bool,
}

fn invalid(msg: impl Into<String>) -> RunError {
    RunError::Config(ConfigError::Invalid(msg.into()))
}

/// Core validation failures on configured inputs are configuration errors.
fn checked<T>(r: lnoi_hom::Result<T>) -> RunResult<T> {
    r.map_err(|e| invalid(e.to_string()))
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_owned(), source }
}

pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![start];
    }
    (0..points).map(|i| start + (stop - start) * i as f64 / (points - 1) as f64).collect()
}

pub fn stepped(start: f64, stop: f64, step: f64) -> RunResult<Vec<f64>> {
    if !(step > 0.0) || stop < start {
        return Err(invalid(format!("range {start}..{stop} with step {step} is empty")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| start + i as f64 * step).collect())
}

fn geometry(p: &Params, default_gap: Option<f64>) -> RunResult<WaveguideGeometry> {
    let g = WaveguideGeometry {
        film_thickness_nm: p.float("film_thickness_nm"),
        etch_depth_nm: p.float("etch_depth_nm"),
        top_width_um: p.float("top_width_um"),
        sidewall_angle_deg: p.float("sidewall_angle_deg"),
        cladding_thickness_nm: p.float("cladding_thickness_nm"),
        gap_um: p.opt_float("gap_um").or(default_gap),
        ..WaveguideGeometry::lnoi_single()
    };
    checked(g.validate())?;
    Ok(g)
}

fn cross_section_options(p: &Params) -> CrossSectionOptions {
    CrossSectionOptions {
        polarization: match p.text("polarization") {
            "tm" => Polarization::TmLike,
            _ => Polarization::TeLike,
        },
        lateral_padding_um: p.float("lateral_padding_um"),
        vertical_padding_um: p.float("vertical_padding_um"),
    }
}

fn delays(p: &Params) -> RunResult<Vec<f64>> {
    let (a, b) = (p.float("delay_start_ps"), p.float("delay_stop_ps"));
    let n = p.count("delay_points")?;
    if n < 2 || !(b > a) {
        return Err(invalid("delay scan needs delay_stop_ps > delay_start_ps and at least 2 points"));
    }
    Ok(linspace(a, b, n))
}

fn delay_line(p: &Params) -> DelayLine {
    let pass = if p.text("stage_pass") == "double" { StagePass::Double } else { StagePass::Single };
    DelayLine::new(pass, p.float("stage_zero_um"))
}

fn photon_state(p: &Params) -> RunResult<TwoPhotonState> {
    let v = p.float("source_visibility");
    if !(0.0..=1.0).contains(&v) {
        return Err(invalid(format!("source_visibility {v} outside [0, 1]")));
    }
    let s = TwoPhotonState::degenerate(p.float("center_wavelength_nm"), p.float("bandwidth_nm"), 1.0)
        .with_source_visibility(v);
    checked(s.validate())?;
    Ok(s)
}

fn splitting_ratio(p: &Params, key: &str) -> RunResult<f64> {
    let eta = p.float(key);
    if !(0.0..=1.0).contains(&eta) {
        return Err(invalid(format!("{key} {eta} outside [0, 1]")));
    }
    Ok(eta)
}

pub fn run(p: &Params, ctx: &Context) -> RunResult<Outcome> {
    match p.scenario {
        Scenario::Modes => modes(p, ctx),
        Scenario::CouplerSweep => coupler_sweep(p, ctx),
        Scenario::Bandwidth => bandwidth(p, ctx),
        Scenario::HomDip => hom_dip(p, ctx),
        Scenario::SimulateCounts => simulate(p, ctx),
        Scenario::FitCoupling => fit_coupling(p, ctx),
        Scenario::FitDip => fit_dip(p, ctx),
        Scenario::FpLoss => fp_loss(p, ctx),
        Scenario::ReproducePaper => crate::reproduce::run(p, ctx),
    }
}

fn done(report: Report) -> RunResult<Outcome> {
    Ok(Outcome { report, passed: true })
}

fn modes(p: &Params, ctx: &Context) -> RunResult<Outcome> {
    let g = geometry(p, None)?;
    let wavelength_um = p.float("wavelength_nm") * 1e-3;
    let pitch = p.float("grid_pitch_nm");
    let count = p.count("mode_count")?;
    if count == 0 {
        return Err(invalid("mode_count must be at least 1"));
    }
    let map = checked(build_cross_section_with(&g, wavelength_um, pitch, &cross_section_options(p)))?;
    ctx.note(&format!("grid {} x {} cells", map.nx(), map.ny()));
    let mut report = Report::new("modes", ctx.seed);
    report.int("grid_nx", map.nx() as i128);
    report.int("grid_ny", map.ny() as i128);
    report.float("grid_dx_nm", map.dx_nm());
    report.float("grid_dy_nm", map.dy_nm());
    map.write_csv(ctx.create("index_map.csv", &mut report)?)?;

    let modes = solve_modes_with(&map, wavelength_um, count, &SolverConfig::default())?;
    report.int("guided_modes", modes.len() as i128);
    if modes.is_empty() {
        eprintln!("warning: no guided mode at {} nm", p.float("wavelength_nm"));
    }
    for (k, m) in modes.iter().enumerate() {
        ctx.note(&format!("mode {k}: n_eff {:.6} residual {:.1e}", m.n_eff, m.residual));
        report.float(&format!("n_eff_{k}"), m.n_eff);
        report.text(&format!("parity_{k}"), &format!("{:?}", m.parity).to_lowercase());
        write_mode_csv(&map, m, ctx.create(&format!("mode_{k}.csv"), &mut report)?)?;
    }
    if g.gap_um.is_some() && modes.len() >= 2 {
        if let (Parity::Symmetric, Parity::Antisymmetric) = (modes[0].parity, modes[1].parity) {
            let dn = modes[0].n_eff - modes[1].n_eff;
            report.float("delta_n", dn);
            report.float("coupling_length_um", coupling_length_from_delta_n(wavelength_um, dn)?);
        }
    }
    done(report)
}

/// Coupling length from the config, or from a supermode solve at `wavelength_nm`.
fn coupling_length(p: &Params, g: &WaveguideGeometry, wavelength_nm: f64, ctx: &Context) -> RunResult<(f64, bool)> {
    if let Some(lc) = p.opt_float("coupling_length_um") {
        return Ok((lc, false));
    }
    ctx.note(&format!("solving supermodes at {wavelength_nm} nm"));
    let pair = supermodes_with(
        g,
        wavelength_nm * 1e-3,
        p.float("grid_pitch_nm"),
        &cross_section_options(p),
        &SolverConfig::default(),
    )?;
    Ok((pair.coupling_length_um()?, true))
}

fn coupler_sweep(p: &Params, ctx: &Context) -> RunResult<Outcome> {
    let g = geometry(p, Some(2.3))?;
    let wavelength = p.float("wavelength_nm");
    let lengths = stepped(p.float("length_start_um"), p.float("length_stop_um"), p.float("length_step_um"))?;
    if lengths[0] < 0.0 {
        return Err(invalid("interaction lengths must be non-negative"));
    }
    let target = splitting_ratio(p, "target_ratio")?;
    let (lc, solved) = coupling_length(p, &g, wavelength, ctx)?;
    let device = checked(CouplerDevice::new(lc, wavelength))?.with_bend_offset(p.float("bend_offset_um"));
    checked(device.validate())?;

    let mut report = Report::new("coupler-sweep", ctx.seed);
    report.float("coupling_length_um", lc);
    report.text("coupling_length_source", if solved { "mode-solver" } else { "config" });
    report.float("bend_offset_um", device.bend_offset_um);
    for order in 0..3u32 {
        match device.length_for_ratio(target, order) {
            Ok(l) => report.float(&format!("length_for_target_order_{order}_um"), l),
            Err(e) => ctx.note(&e.to_string()),
        }
    }
    let mut w = ctx.create("coupler_sweep.csv", &mut report)?;
    let path = ctx.out.join("coupler_sweep.csv");
    writeln!(w, "interaction_length_um,eta").map_err(io_error(&path))?;
    for l in lengths {
        let eta = device.with_interaction_length(l).splitting_ratio(wavelength)?;
        writeln!(w, "{l},{eta}").map_err(io_error(&path))?;
    }
    w.flush().map_err(io_error(&path))?;
    done(report)
}

/// Coupler device for the bandwidth scenario. Missing coupling length or
/// dispersion comes from supermode solves 10 nm either side of the reference.
pub fn bandwidth_device(p: &Params, ctx: &Context) -> RunResult<CouplerDevice> {
    let reference = p.float("reference_wavelength_nm");
    let g = geometry(p, Some(2.3))?;
    let device = match (p.opt_float("coupling_length_um"), p.opt_float("dispersion_slope_per_nm")) {
        (Some(lc), Some(slope)) => checked(CouplerDevice::new(lc, reference))?.with_dispersion_slope(slope),
        (lc, slope) => {
            let solve = |l_nm: f64| -> RunResult<f64> {
                ctx.note(&format!("solving supermodes at {l_nm} nm"));
                let pair = supermodes_with(
                    &g,
                    l_nm * 1e-3,
                    p.float("grid_pitch_nm"),
                    &cross_section_options(p),
                    &SolverConfig::default(),
                )?;
                Ok(pair.delta_n())
            };
            let (a, b) = (reference - 10.0, reference + 10.0);
            let calibrated = CouplerDevice::from_delta_n_samples((a, solve(a)?), (b, solve(b)?))?;
            let d = checked(CouplerDevice::new(lc.unwrap_or(calibrated.coupling_length_um), reference))?;
            d.with_dispersion_slope(slope.unwrap_or(calibrated.dispersion_slope_per_nm))
        }
    };
    let device = device.with_bend_offset(p.float("bend_offset_um"));
    checked(device.validate())?;
    Ok(device)
}

fn bandwidth(p: &Params, ctx: &Context) -> RunResult<Outcome> {
    let target = splitting_ratio(p, "target_ratio")?;
    let order = u32::try_from(p.int("coupling_order")).map_err(|_| invalid("coupling_order must be non-negative"))?;
    let tolerance = p.float("ratio_tolerance");
    if !(tolerance > 0.0) {
        return Err(invalid("ratio_tolerance must be positive"));
    }
    let (start, stop) = (p.float("scan_start_nm"), p.float("scan_stop_nm"));
    stepped(start, stop, p.float("scan_step_nm"))?;
    let base = bandwidth_device(p, ctx)?;
    let length = match p.opt_float("interaction_length_um") {
        Some(l) => l,
        None => base.length_for_ratio(target, order)?,
    };
    let device = base.with_interaction_length(length);
    checked(device.validate())?;
    let curve = device.bandwidth_scan(start, stop, p.float("scan_step_nm"))?;
    let reference = device.reference_wavelength_nm;
    let half = (reference - start).max(stop - reference).max(0.0);

    let mut report = Report::new("bandwidth", ctx.seed);
    report.float("coupling_length_um", device.coupling_length_um);
    report.float("dispersion_slope_per_nm", device.dispersion_slope_per_nm);
    report.float("interaction_length_um", length);
    report.float("bend_offset_um", device.bend_offset_um);
    report.int("coupling_order", device.coupling_order()? as i128);
    report.float("eta_at_reference", device.splitting_ratio(reference)?);
    let dev = curve.iter().map(|(_, e)| (e - target).abs()).fold(0.0, f64::max);
    report.float("max_deviation_from_target", dev);
    report.float("ratio_bandwidth_nm", device.ratio_bandwidth(tolerance, half)?);
    write_bandwidth_csv(&curve, ctx.create("bandwidth.csv", &mut report)?)?;
    done(report)
}

fn hom_dip(p: &Params, ctx: &Context) -> RunResult<Outcome> {
    let state = photon_state(p)?;
    let eta = splitting_ratio(p, "splitting_ratio")?;
    let delays = delays(p)?;
    let scan = coincidence_curve(&state, eta, &delays, p.flag("normalized"))?.with_delay_line(delay_line(p));
    let mut report = Report::new("hom-dip", ctx.seed);
    report.float("visibility_max", hom_visibility_max(eta));
    report.float("combined_visibility", combined_visibility(p.float("source_visibility"), eta));
    report.float("single_pair_visibility", single_pair_visibility(&state, eta));
    report.float("dip_width_ps", state.dip_width_ps());
    report.float("dip_fwhm_ps", state.dip_width_ps() * GAUSSIAN_FWHM_PER_SIGMA);
    report.float("ps_per_stage_um", scan.delay_line.ps_per_um());
    scan.write_csv(ctx.create("hom_dip.csv", &mut report)?)?;
    done(report)
}

fn simulate(p: &Params, ctx: &Context) -> RunResult<Outcome> {
    let state = photon_state(p)?;
    let eta = splitting_ratio(p, "splitting_ratio")?;
    let delays = delays(p)?;
    let statistics =
        if p.text("pair_statistics") == "thermal" { PairStatistics::Thermal } else { PairStatistics::Poissonian };
    let pulses = u64::try_from(p.int("pulses_per_point")).map_err(|_| invalid("pulses_per_point must be positive"))?;
    let mut source = SourceModel::new(p.float("mean_pairs"), pulses).with_statistics(statistics);
    source.repetition_period_ns = p.float("repetition_period_ns");
    checked(source.validate())?;
    let mut detectors = DetectorModel::new(p.float("detector_efficiency"), p.float("dead_time_ns"));
    detectors.dark_count_probability = p.float("dark_count_probability");
    checked(detectors.validate())?;

    ctx.note(&format!("simulating {} points x {pulses} pulses", delays.len()));
    let scan = simulate_counts(&state, eta, &source, &detectors, &delays, ctx.seed)?.with_delay_line(delay_line(p));
    let mut report = Report::new("simulate-counts", ctx.seed);
    scan.write_csv(ctx.create("counts.csv", &mut report)?)?;
    let total: f64 = scan.values.iter().sum();
    report.float("total_coincidences", total);
    match multi_pair_visibility_with(source.mean_pairs, statistics, eta, state.spectral_overlap(0.0), &detectors) {
        Ok(v) => report.float("predicted_visibility", v),
        Err(e) => ctx.note(&format!("no enumeration prediction: {e}")),
    }
    match fit_gaussian_dip(&scan, None) {
        Ok(fit) => {
            report.prefixed("fit_", &fit.report());
            fit.write_residuals_csv(ctx.create("counts_fit_residuals.csv", &mut report)?)?;
        }
        Err(e) => eprintln!("warning: dip fit failed: {e}"),
    }
    done(report)
}

fn write_fit(fit: &FitResult, name: &str, report: &mut Report, ctx: &Context) -> RunResult<()> {
    report.prefixed("", &fit.report());
    fit.write_residuals_csv(ctx.create(name, report)?)?;
    Ok(())
}

fn read_input(p: &Params) -> RunResult<Option<File>> {
    match p.opt_text("input_csv") {
        None => Ok(None),
        Some(path) => File::open(path).map(Some).map_err(|e| invalid(format!("input_csv {path}: {e}"))),
    }
}

fn fit_coupling(p: &Params, ctx: &Context) -> RunResult<Outcome> {
    let port = if p.text("port") == "b" { InputPort::B } else { InputPort::A };
    let mut report = Report::new("fit-coupling", ctx.seed);
    let series = match read_input(p)? {
        Some(f) => checked(PowerRatioSeries::read_csv(f, port))?,
        None => {
            let n = p.count("synthetic_points")?;
            let lengths = linspace(p.float("synthetic_length_start_um"), p.float("synthetic_length_stop_um"), n);
            let truth = SinusoidGuess {
                coupling_length_um: p.float("synthetic_coupling_length_um"),
                bend_offset_um: p.float("synthetic_bend_offset_um"),
                amplitude: p.float("synthetic_amplitude"),
                offset: p.float("synthetic_offset"),
            };
            let noise = p.float("synthetic_noise");
            if !(noise >= 0.0) {
                return Err(invalid("synthetic_noise must be non-negative"));
            }
            let s = checked(synthetic_series(truth, &lengths, noise, ctx.seed, port))?;
            s.write_csv(ctx.create("coupling_series.csv", &mut report)?)?;
            s
        }
    };
    let fit = fit_coupling_sinusoid(&series, None)?;
    write_fit(&fit, "coupling_fit_residuals.csv", &mut report, ctx)?;
    done(report)
}

fn fit_dip(p: &Params, ctx: &Context) -> RunResult<Outcome> {
    let mut report = Report::new("fit-dip", ctx.seed);
    let scan = match read_input(p)? {
        Some(f) => checked(lnoi_hom::hom::DelayScan::read_csv(f))?,
        None => {
            let delays = delays(p)?;
            let truth = DipGuess {
                visibility: p.float("synthetic_visibility"),
                center_ps: p.float("synthetic_center_ps"),
                width_ps: p.float("synthetic_width_ps"),
                baseline: p.float("synthetic_baseline"),
            };
            if !(truth.width_ps > 0.0 && truth.baseline > 0.0) {
                return Err(invalid("synthetic width and baseline must be positive"));
            }
            let s = if p.flag("synthetic_poisson") {
                synthetic_dip_counts(truth, &delays, ctx.seed)?
            } else {
                synthetic_dip(truth, &delays)?
            };
            let s = s.with_delay_line(delay_line(p));
            s.write_csv(ctx.create("dip_scan.csv", &mut report)?)?;
            s
        }
    };
    let fit = fit_gaussian_dip(&scan, None)?;
    write_fit(&fit, "dip_fit_residuals.csv", &mut report, ctx)?;
    normalized_by_baseline(&scan, &fit)?.write_csv(ctx.create("dip_normalized.csv", &mut report)?)?;
    done(report)
}

fn fp_loss(p: &Params, ctx: &Context) -> RunResult<Outcome> {
    let n_eff = p.float("n_eff");
    let length = p.float("length_cm");
    if !(n_eff > 1.0) {
        return Err(invalid("n_eff must exceed 1"));
    }
    let r = facet_reflectivity(n_eff);
    let mut report = Report::new("fp-loss", ctx.seed);
    let contrast = match p.opt_float("contrast") {
        Some(k) => k,
        None => {
            let spf = p.count("samples_per_fringe")?;
            let fringes = p.count("fringes")?;
            if spf < 4 || fringes == 0 {
                return Err(invalid("need samples_per_fringe >= 4 and fringes >= 1"));
            }
            let curve = synthetic_fringes(r, p.float("alpha_db_per_cm"), length, spf, fringes);
            let mut w = ctx.create("fringes.csv", &mut report)?;
            let path = ctx.out.join("fringes.csv");
            writeln!(w, "phase_rad,transmission").map_err(io_error(&path))?;
            for (phi, t) in &curve {
                writeln!(w, "{phi},{t}").map_err(io_error(&path))?;
            }
            w.flush().map_err(io_error(&path))?;
            fringe_contrast(&curve.iter().map(|c| c.1).collect::<Vec<_>>())?
        }
    };
    let loss = checked(fabry_perot_loss(contrast, r, length))?;
    if loss.negative_loss {
        eprintln!("warning: contrast {contrast} exceeds the lossless limit; loss is negative");
    }
    report.float("contrast", contrast);
    report.float("facet_reflectivity", r);
    report.float("lossless_contrast", lossless_contrast(r));
    report.float("effective_reflectivity", loss.effective_reflectivity);
    report.float("alpha_db_per_cm", loss.alpha_db_per_cm);
    report.flag("negative_loss", loss.negative_loss);
    done(report)
}
