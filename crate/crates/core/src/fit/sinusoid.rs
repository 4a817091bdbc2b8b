//! Coupling-length extraction from splitting ratios measured over a set of
//! interaction lengths.

use std::f64::consts::PI;

use std::io::{Read, Write};

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::lm::{levenberg_marquardt, LmConfig, Model};
use super::{FitResult, Weighting};
use crate::error::{Error, Result};
use crate::table::read_columns;

pub const MIN_SERIES_POINTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputPort {
    #[default]
    A,
    B,
}

/// Output power fraction `P1 / (P1 + P2)` against interaction length.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerRatioSeries {
    pub lengths_um: Vec<f64>,
    pub ratios: Vec<f64>,
    pub port: InputPort,
}

impl PowerRatioSeries {
    pub fn new(lengths_um: Vec<f64>, ratios: Vec<f64>, port: InputPort) -> Result<Self> {
        let s = Self { lengths_um, ratios, port };
        s.validate()?;
        Ok(s)
    }

    /// Builds the series from the two measured output powers.
    pub fn from_powers(lengths_um: Vec<f64>, p1: &[f64], p2: &[f64], port: InputPort) -> Result<Self> {
        if p1.len() != p2.len() {
            return Err(Error::InvalidInput("power columns differ in length".into()));
        }
        let ratios = p1
            .iter()
            .zip(p2)
            .map(|(&a, &b)| {
                if a < 0.0 || b < 0.0 || a + b <= 0.0 {
                    Err(Error::InvalidInput(format!("invalid power pair ({a}, {b})")))
                } else {
                    Ok(a / (a + b))
                }
            })
            .collect::<Result<_>>()?;
        Self::new(lengths_um, ratios, port)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengths_um.len() != self.ratios.len() {
            return Err(Error::InvalidInput("lengths and ratios differ in length".into()));
        }
        if self.lengths_um.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidInput("non-finite interaction length".into()));
        }
        if self.lengths_um.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("interaction lengths must be strictly increasing".into()));
        }
        if self.ratios.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::InvalidInput("ratios must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Writes `interaction_length_um,ratio`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["interaction_length_um", "ratio"])?;
        for (l, r) in self.lengths_um.iter().zip(&self.ratios) {
            w.write_record([l.to_string(), r.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `interaction_length_um,ratio`, or `interaction_length_um,p1,p2`
    /// when no ratio column is present.
    pub fn read_csv<R: Read>(mut reader: R, port: InputPort) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        match read_columns(text.as_bytes(), &["interaction_length_um", "ratio"]) {
            Ok(mut cols) => {
                let ratios = cols.pop().unwrap_or_default();
                Self::new(cols.pop().unwrap_or_default(), ratios, port)
            }
            Err(_) => {
                let cols = read_columns(text.as_bytes(), &["interaction_length_um", "p1", "p2"])?;
                Self::from_powers(cols[0].clone(), &cols[1], &cols[2], port)
            }
        }
    }

    pub fn span_um(&self) -> f64 {
        match (self.lengths_um.first(), self.lengths_um.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }
}

/// `P(L) = B + A sin^2(pi (L + L0) / (2 Lc))` with parameters
/// `[Lc, L0, A, B]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SinusoidModel;

impl Model for SinusoidModel {
    fn parameter_count(&self) -> usize {
        4
    }

    fn value(&self, x: f64, p: &[f64]) -> f64 {
        let s = (PI * (x + p[1]) / (2.0 * p[0])).sin();
        p[3] + p[2] * s * s
    }

    fn gradient(&self, x: f64, p: &[f64], g: &mut [f64]) {
        let phi = PI * (x + p[1]) / (2.0 * p[0]);
        let s2 = (2.0 * phi).sin();
        g[0] = -p[2] * s2 * phi / p[0];
        g[1] = p[2] * s2 * PI / (2.0 * p[0]);
        g[2] = phi.sin().powi(2);
        g[3] = 1.0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidGuess {
    pub coupling_length_um: f64,
    pub bend_offset_um: f64,
    pub amplitude: f64,
    pub offset: f64,
}

impl SinusoidGuess {
    fn as_vec(&self) -> Vec<f64> {
        vec![self.coupling_length_um, self.bend_offset_um, self.amplitude, self.offset]
    }
}

pub const SINUSOID_PARAMETERS: [&str; 4] = ["coupling_length_um", "bend_offset_um", "amplitude", "offset"];

/// Series sampled from the sinusoid model with additive Gaussian noise of
/// standard deviation `noise_sigma`, clamped to [0, 1].
pub fn synthetic_series(
    truth: SinusoidGuess,
    lengths_um: &[f64],
    noise_sigma: f64,
    seed: u64,
    port: InputPort,
) -> Result<PowerRatioSeries> {
    let noise = Normal::new(0.0, noise_sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = truth.as_vec();
    let ratios =
        lengths_um.iter().map(|&l| (SinusoidModel.value(l, &p) + noise.sample(&mut rng)).clamp(0.0, 1.0)).collect();
    PowerRatioSeries::new(lengths_um.to_vec(), ratios, port)
}

/// Initial guess from a dense periodogram: for each trial frequency the
/// offset, cosine and sine amplitudes are solved by linear least squares and
/// the frequency with the smallest residual wins.
pub fn periodogram_guess(series: &PowerRatioSeries) -> Result<SinusoidGuess> {
    let x = &series.lengths_um;
    let y = &series.ratios;
    let span = series.span_um();
    let spacing = span / (x.len() - 1) as f64;
    let (f_lo, f_hi) = (0.4 / span, 0.5 / spacing);
    let steps = ((f_hi - f_lo) * span * 50.0).ceil().max(1.0) as usize;
    let mut best: Option<(f64, f64, Vector3<f64>)> = None;
    for k in 0..=steps {
        let f = f_lo + (f_hi - f_lo) * k as f64 / steps as f64;
        let w = 2.0 * PI * f;
        let mut ata = Matrix3::zeros();
        let mut aty = Vector3::zeros();
        for (&xi, &yi) in x.iter().zip(y) {
            let row = Vector3::new(1.0, (w * xi).cos(), (w * xi).sin());
            ata += row * row.transpose();
            aty += row * yi;
        }
        let Some(coef) = ata.try_inverse().map(|inv| inv * aty) else { continue };
        let ssr: f64 = x
            .iter()
            .zip(y)
            .map(|(&xi, &yi)| {
                let r = yi - coef[0] - coef[1] * (w * xi).cos() - coef[2] * (w * xi).sin();
                r * r
            })
            .sum();
        if best.as_ref().is_none_or(|b| ssr < b.1) {
            best = Some((f, ssr, coef));
        }
    }
    let (f, _, coef) = best.ok_or_else(|| Error::Unidentifiable("no usable trial period".into()))?;
    // c cos(wx) + s sin(wx) = R cos(wx - phase) = -R cos(w (x + L0)).
    let r = coef[1].hypot(coef[2]);
    let phase = coef[2].atan2(coef[1]);
    let coupling_length_um = 1.0 / (2.0 * f);
    let bend_offset_um = (-phase - PI) / (2.0 * PI * f);
    Ok(SinusoidGuess {
        coupling_length_um,
        bend_offset_um: bend_offset_um.rem_euclid(2.0 * coupling_length_um),
        amplitude: 2.0 * r,
        offset: coef[0] - r,
    })
}

/// Maps parameters to `Lc > 0`, `A >= 0`, `L0` in `[0, 2 Lc)` without
/// changing the curve.
fn canonical(p: &[f64]) -> Vec<f64> {
    let (mut lc, mut l0, mut a, mut b) = (p[0], p[1], p[2], p[3]);
    if lc < 0.0 {
        lc = -lc;
        l0 = -l0;
    }
    if a < 0.0 {
        b += a;
        a = -a;
        l0 += lc;
    }
    vec![lc, l0.rem_euclid(2.0 * lc), a, b]
}

/// Least-squares fit of `P(L) = B + A sin^2(pi (L + L0) / (2 Lc))`.
pub fn fit_coupling_sinusoid(series: &PowerRatioSeries, guess: Option<SinusoidGuess>) -> Result<FitResult> {
    series.validate()?;
    if series.lengths_um.len() < MIN_SERIES_POINTS {
        return Err(Error::InvalidInput(format!(
            "{} points; at least {MIN_SERIES_POINTS} are needed",
            series.lengths_um.len()
        )));
    }
    let (lo, hi) = series.ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &r| (a.min(r), b.max(r)));
    if hi - lo <= 1e-12 {
        return Err(Error::Unidentifiable("ratio series is constant".into()));
    }
    let start = match guess {
        Some(g) => g,
        None => periodogram_guess(series)?,
    };
    let cfg = LmConfig::default();
    let x = &series.lengths_um;
    let y = &series.ratios;
    let first = levenberg_marquardt(&SinusoidModel, x, y, None, &start.as_vec(), &cfg)?;
    let outcome = levenberg_marquardt(&SinusoidModel, x, y, None, &canonical(&first.parameters), &cfg)?;
    let lc = outcome.parameters[0];
    if !(lc.is_finite() && lc > 0.0) || lc > series.span_um() {
        return Err(Error::Unidentifiable(format!(
            "fitted coupling length {lc} µm is not covered by a {} µm scan",
            series.span_um()
        )));
    }
    Ok(FitResult::from_outcome(SINUSOID_PARAMETERS.to_vec(), &SinusoidModel, x, y, Weighting::Uniform, outcome))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn lengths() -> Vec<f64> {
        (0..12).map(|i| 30.0 + 50.0 * i as f64).collect()
    }

    fn synth(lc: f64, l0: f64, a: f64, b: f64) -> PowerRatioSeries {
        let x = lengths();
        let y = x.iter().map(|&l| SinusoidModel.value(l, &[lc, l0, a, b])).collect();
        PowerRatioSeries::new(x, y, InputPort::A).unwrap()
    }

    #[test]
    fn noiseless_roundtrip() {
        let fit = fit_coupling_sinusoid(&synth(114.85, 20.0, 1.0, 0.0), None).unwrap();
        for (name, truth) in SINUSOID_PARAMETERS.iter().zip([114.85, 20.0, 1.0, 0.0]) {
            let v = fit.value(name).unwrap();
            let tol = if truth == 0.0 { 1e-6 } else { 1e-3 * truth };
            assert!((v - truth).abs() < tol, "{name}: {v}");
        }
    }

    #[test]
    fn other_port_and_offsets() {
        let fit = fit_coupling_sinusoid(&synth(110.87, 75.0, 0.9, 0.04), None).unwrap();
        assert!((fit.value("coupling_length_um").unwrap() - 110.87).abs() < 1e-6);
        assert!((fit.value("bend_offset_um").unwrap() - 75.0).abs() < 1e-6);
    }

    #[test]
    fn constant_series_unidentifiable() {
        let x = lengths();
        let s = PowerRatioSeries::new(x, vec![0.5; 12], InputPort::B).unwrap();
        assert!(matches!(fit_coupling_sinusoid(&s, None), Err(Error::Unidentifiable(_))));
    }

    #[test]
    fn too_few_points() {
        let s = PowerRatioSeries::new(vec![1.0, 2.0, 3.0], vec![0.1, 0.2, 0.3], InputPort::A).unwrap();
        assert!(fit_coupling_sinusoid(&s, None).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let s = synth(114.85, 20.0, 1.0, 0.0);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(PowerRatioSeries::read_csv(buf.as_slice(), InputPort::A).unwrap(), s);
        let powers = "interaction_length_um,p1,p2\n10,1,3\n20,2,2\n";
        let p = PowerRatioSeries::read_csv(powers.as_bytes(), InputPort::B).unwrap();
        assert_eq!(p.ratios, vec![0.25, 0.5]);
    }

    #[test]
    fn seeded_synthesis() {
        let truth = SinusoidGuess { coupling_length_um: 114.85, bend_offset_um: 20.0, amplitude: 1.0, offset: 0.0 };
        let a = synthetic_series(truth, &lengths(), 0.01, 3, InputPort::A).unwrap();
        let b = synthetic_series(truth, &lengths(), 0.01, 3, InputPort::A).unwrap();
        assert_eq!(a, b);
        let clean = synthetic_series(truth, &lengths(), 0.0, 3, InputPort::A).unwrap();
        assert_eq!(clean, synth(114.85, 20.0, 1.0, 0.0));
    }

    #[test]
    fn ratios_from_powers() {
        let s = PowerRatioSeries::from_powers(vec![1.0, 2.0], &[1.0, 3.0], &[1.0, 1.0], InputPort::A).unwrap();
        assert_eq!(s.ratios, vec![0.5, 0.75]);
        assert!(PowerRatioSeries::new(vec![2.0, 1.0], vec![0.1, 0.2], InputPort::A).is_err());
    }

    #[test]
    fn uncertainty_tracks_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let clean = synth(114.85, 20.0, 1.0, 0.0);
        let mut estimates = Vec::new();
        let mut reported = Vec::new();
        for _ in 0..100 {
            let y = clean.ratios.iter().map(|v| (v + noise.sample(&mut rng)).clamp(0.0, 1.0)).collect();
            let s = PowerRatioSeries::new(clean.lengths_um.clone(), y, InputPort::A).unwrap();
            let fit = fit_coupling_sinusoid(&s, None).unwrap();
            estimates.push(fit.value("coupling_length_um").unwrap());
            reported.push(fit.sigma("coupling_length_um").unwrap());
        }
        let (_, spread) = crate::fit::sample_mean_std(&estimates).unwrap();
        let mean_sigma = reported.iter().sum::<f64>() / reported.len() as f64;
        assert!(mean_sigma / spread < 2.0 && spread / mean_sigma < 2.0, "{mean_sigma} vs {spread}");
    }
}
