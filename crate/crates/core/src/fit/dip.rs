//! Gaussian fit of a coincidence dip.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::lm::{levenberg_marquardt, LmConfig, Model};
use super::{FitResult, Weighting};
use crate::error::{Error, Result};
use crate::hom::{DelayScan, ValueKind, GAUSSIAN_FWHM_PER_SIGMA};

pub const MIN_SCAN_POINTS: usize = 10;

pub const DIP_PARAMETERS: [&str; 4] = ["visibility", "center_ps", "width_ps", "baseline"];

/// `C(t) = B (1 - V exp(-(t - t0)^2 / (2 w^2)))` with parameters
/// `[V, t0, w, B]`. Dips narrower than `min_width_ps` or centred outside
/// `center_range_ps` cannot be resolved by the scan and are excluded.
#[derive(Debug, Clone, Copy)]
pub struct DipModel {
    pub min_width_ps: f64,
    pub center_range_ps: (f64, f64),
}

impl Default for DipModel {
    fn default() -> Self {
        Self { min_width_ps: 0.0, center_range_ps: (f64::NEG_INFINITY, f64::INFINITY) }
    }
}

impl Model for DipModel {
    fn parameter_count(&self) -> usize {
        4
    }

    fn value(&self, x: f64, p: &[f64]) -> f64 {
        let d = x - p[1];
        p[3] * (1.0 - p[0] * (-d * d / (2.0 * p[2] * p[2])).exp())
    }

    fn gradient(&self, x: f64, p: &[f64], g: &mut [f64]) {
        let d = x - p[1];
        let w2 = p[2] * p[2];
        let e = (-d * d / (2.0 * w2)).exp();
        g[0] = -p[3] * e;
        g[1] = -p[3] * p[0] * e * d / w2;
        g[2] = -p[3] * p[0] * e * d * d / (w2 * p[2]);
        g[3] = 1.0 - p[0] * e;
    }

    fn admissible(&self, p: &[f64]) -> bool {
        p[2].abs() >= self.min_width_ps && (self.center_range_ps.0..=self.center_range_ps.1).contains(&p[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipGuess {
    pub visibility: f64,
    pub center_ps: f64,
    pub width_ps: f64,
    pub baseline: f64,
}

/// Baseline from the upper quartile, centre at the smoothed minimum and
/// width from the half-depth crossings.
pub fn initial_dip_guess(x: &[f64], y: &[f64]) -> DipGuess {
    let n = y.len();
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let top = &sorted[n - (n / 4).max(1)..];
    let baseline = top.iter().sum::<f64>() / top.len() as f64;
    let smooth: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            y[a..=b].iter().sum::<f64>() / (b - a + 1) as f64
        })
        .collect();
    let imin = (0..n).min_by(|&a, &b| smooth[a].total_cmp(&smooth[b])).unwrap_or(0);
    let visibility = if baseline > 0.0 { (1.0 - smooth[imin] / baseline).clamp(0.0, 1.0) } else { 0.0 };
    let span = x[n - 1] - x[0];
    let level = baseline * (1.0 - visibility / 2.0);
    let mut left = imin;
    while left > 0 && smooth[left] < level {
        left -= 1;
    }
    let mut right = imin;
    while right < n - 1 && smooth[right] < level {
        right += 1;
    }
    let fwhm = x[right] - x[left];
    let spacing = span / (n - 1) as f64;
    let width_ps =
        if visibility > 0.05 && fwhm > 0.0 { (fwhm / GAUSSIAN_FWHM_PER_SIGMA).max(spacing) } else { span / 10.0 };
    DipGuess { visibility, center_ps: x[imin], width_ps, baseline }
}

/// Fits a Gaussian dip. Count scans use Poisson weights; probability scans
/// use uniform weights.
pub fn fit_gaussian_dip(scan: &DelayScan, guess: Option<DipGuess>) -> Result<FitResult> {
    scan.validate()?;
    if scan.len() < MIN_SCAN_POINTS {
        return Err(Error::InvalidInput(format!("{} points; at least {MIN_SCAN_POINTS} are needed", scan.len())));
    }
    let x = &scan.delays_ps;
    let y = &scan.values;
    if y.iter().all(|&v| v == 0.0) {
        return Err(Error::Unidentifiable("scan contains no coincidences".into()));
    }
    let g = guess.unwrap_or_else(|| initial_dip_guess(x, y));
    let weighting = match scan.kind {
        ValueKind::Counts => Weighting::Poisson,
        ValueKind::Probability => Weighting::Uniform,
    };
    let sigma = weighting.sigmas(y);
    let spacing = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    let model = DipModel { min_width_ps: spacing, center_range_ps: (x[0], x[x.len() - 1]) };
    let start = [g.visibility, g.center_ps, g.width_ps.max(spacing), g.baseline];
    let mut outcome = levenberg_marquardt(&model, x, y, sigma.as_deref(), &start, &LmConfig::default())?;
    outcome.parameters[2] = outcome.parameters[2].abs();
    Ok(FitResult::from_outcome(DIP_PARAMETERS.to_vec(), &model, x, y, weighting, outcome))
}

/// Noiseless dip curve on `delays_ps`.
pub fn synthetic_dip(truth: DipGuess, delays_ps: &[f64]) -> Result<DelayScan> {
    let p = [truth.visibility, truth.center_ps, truth.width_ps, truth.baseline];
    let model = DipModel::default();
    DelayScan::new(delays_ps.to_vec(), delays_ps.iter().map(|&t| model.value(t, &p)).collect(), ValueKind::Probability)
}

/// Poisson-distributed counts around a dip with mean baseline
/// `truth.baseline`.
pub fn synthetic_dip_counts(truth: DipGuess, delays_ps: &[f64], seed: u64) -> Result<DelayScan> {
    let mean = synthetic_dip(truth, delays_ps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = mean
        .values
        .iter()
        .map(|&m| {
            if m <= 0.0 {
                Ok(0)
            } else {
                let d = Poisson::new(m).map_err(|e| Error::InvalidInput(e.to_string()))?;
                Ok(d.sample(&mut rng) as u64)
            }
        })
        .collect::<Result<Vec<u64>>>()?;
    DelayScan::from_counts(delays_ps.to_vec(), &counts)
}

/// Scan divided by the fitted baseline, so the far-delay level is one.
pub fn normalized_by_baseline(scan: &DelayScan, fit: &FitResult) -> Result<DelayScan> {
    let b = fit.value("baseline")?;
    if b <= 0.0 {
        return Err(Error::Numerical(format!("fitted baseline {b} is not positive")));
    }
    let mut out =
        DelayScan::new(scan.delays_ps.clone(), scan.values.iter().map(|v| v / b).collect(), ValueKind::Probability)?;
    out.normalized = true;
    out.delay_line = scan.delay_line;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delays() -> Vec<f64> {
        (0..50).map(|i| -6.0 + 12.0 * i as f64 / 49.0).collect()
    }

    fn synth(v: f64, t0: f64, w: f64, b: f64) -> DelayScan {
        let x = delays();
        let y = x.iter().map(|&t| DipModel::default().value(t, &[v, t0, w, b])).collect();
        DelayScan::new(x, y, ValueKind::Probability).unwrap()
    }

    #[test]
    fn noiseless_roundtrip() {
        let fit = fit_gaussian_dip(&synth(0.935, 0.3, 1.1, 1.0), None).unwrap();
        assert!((fit.value("visibility").unwrap() - 0.935).abs() < 1e-4);
        assert!((fit.value("center_ps").unwrap() - 0.3).abs() < 1e-6);
        assert!((fit.value("width_ps").unwrap() - 1.1).abs() < 1e-6);
    }

    #[test]
    fn shift_and_scale_invariance() {
        let base = fit_gaussian_dip(&synth(0.8, 0.0, 1.0, 2.0), None).unwrap();
        let mut shifted = synth(0.8, 0.0, 1.0, 2.0);
        shifted.delays_ps.iter_mut().for_each(|t| *t += 1.5);
        let s = fit_gaussian_dip(&shifted, None).unwrap();
        assert!((s.value("center_ps").unwrap() - base.value("center_ps").unwrap() - 1.5).abs() < 1e-6);
        assert!((s.value("visibility").unwrap() - base.value("visibility").unwrap()).abs() < 1e-8);
        let mut scaled = synth(0.8, 0.0, 1.0, 2.0);
        scaled.values.iter_mut().for_each(|v| *v *= 7.0);
        let c = fit_gaussian_dip(&scaled, None).unwrap();
        assert!((c.value("baseline").unwrap() / base.value("baseline").unwrap() - 7.0).abs() < 1e-8);
        assert!((c.value("width_ps").unwrap() - base.value("width_ps").unwrap()).abs() < 1e-6);
    }

    #[test]
    fn flat_counts_give_zero_visibility() {
        let x = delays();
        let counts: Vec<u64> = (0..50).map(|i| 1000 + (i * 37 % 61) as u64 - 30).collect();
        let scan = DelayScan::from_counts(x, &counts).unwrap();
        let fit = fit_gaussian_dip(&scan, None).unwrap();
        let v = fit.value("visibility").unwrap();
        assert!(v.abs() <= 2.0 * fit.sigma("visibility").unwrap(), "{}", fit.report());
    }

    #[test]
    fn poisson_counts_fit() {
        let truth = DipGuess { visibility: 0.935, center_ps: 0.0, width_ps: 1.2, baseline: 5000.0 };
        let scan = synthetic_dip_counts(truth, &delays(), 9).unwrap();
        let fit = fit_gaussian_dip(&scan, None).unwrap();
        let (v, s) = (fit.value("visibility").unwrap(), fit.sigma("visibility").unwrap());
        assert!((v - 0.935).abs() < 4.0 * s, "{v} ± {s}");
        assert_eq!(fit.weighting, Weighting::Poisson);
    }

    #[test]
    fn normalisation() {
        let scan = synth(0.5, 0.0, 1.0, 4.0);
        let fit = fit_gaussian_dip(&scan, None).unwrap();
        let n = normalized_by_baseline(&scan, &fit).unwrap();
        assert!((n.values[0] - 1.0).abs() < 1e-6);
        assert!(n.normalized);
    }

    #[test]
    fn short_scan_rejected() {
        let scan = DelayScan::new(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 1.0], ValueKind::Probability).unwrap();
        assert!(fit_gaussian_dip(&scan, None).is_err());
    }
}
