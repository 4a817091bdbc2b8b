//! Least-squares fits and loss extraction for measured data.

pub mod dip;
pub mod fabry_perot;
pub mod lm;
pub mod sinusoid;
pub mod uncertainty;

use std::fmt::Write as _;
use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use lm::{LmOutcome, Model};

pub use dip::{
    fit_gaussian_dip, initial_dip_guess, normalized_by_baseline, synthetic_dip, synthetic_dip_counts, DipGuess,
    DipModel, DIP_PARAMETERS,
};
pub use fabry_perot::{
    airy_transmission, fabry_perot_loss, facet_reflectivity, fringe_contrast, lossless_contrast, synthetic_fringes,
    FabryPerotLoss,
};
pub use lm::{levenberg_marquardt, LmConfig};
pub use sinusoid::{
    fit_coupling_sinusoid, periodogram_guess, synthetic_series, InputPort, PowerRatioSeries, SinusoidGuess,
    SinusoidModel, SINUSOID_PARAMETERS,
};
pub use uncertainty::{
    propagate_visibility_uncertainty, sample_visibility_uncertainty, visibility_max_slope, UncertainValue,
};

/// How residuals are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    /// Equal weights; covariance scaled by the reduced chi-square.
    Uniform,
    /// `sigma_i = sqrt(max(count_i, 1))`; covariance taken as absolute.
    Poisson,
}

impl Weighting {
    pub(crate) fn sigmas(self, y: &[f64]) -> Option<Vec<f64>> {
        match self {
            Weighting::Uniform => None,
            Weighting::Poisson => Some(y.iter().map(|&c| c.max(1.0).sqrt()).collect()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub names: Vec<&'static str>,
    pub values: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub residual_rms: f64,
    pub chi_squared: f64,
    pub degrees_of_freedom: usize,
    pub iterations: usize,
    pub converged: bool,
    pub weighting: Weighting,
    /// `(x, observed, fitted)` per data point.
    pub points: Vec<(f64, f64, f64)>,
}

impl FitResult {
    pub(crate) fn from_outcome<M: Model>(
        names: Vec<&'static str>,
        model: &M,
        x: &[f64],
        y: &[f64],
        weighting: Weighting,
        outcome: LmOutcome,
    ) -> Self {
        let dof = x.len().saturating_sub(names.len());
        let scale = match weighting {
            Weighting::Uniform if dof > 0 => outcome.cost / dof as f64,
            _ => 1.0,
        };
        let mut covariance = outcome.inverse_normal * scale;
        let sym = (&covariance + covariance.transpose()) * 0.5;
        covariance = sym;
        let points: Vec<(f64, f64, f64)> =
            x.iter().zip(y).map(|(&xi, &yi)| (xi, yi, model.value(xi, &outcome.parameters))).collect();
        let residual_rms = (points.iter().map(|(_, o, f)| (o - f) * (o - f)).sum::<f64>() / points.len() as f64).sqrt();
        Self {
            names,
            values: outcome.parameters,
            covariance,
            residual_rms,
            chi_squared: outcome.cost,
            degrees_of_freedom: dof,
            iterations: outcome.iterations,
            converged: true,
            weighting,
            points,
        }
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|&n| n == name)
            .ok_or_else(|| Error::InvalidInput(format!("no fit parameter named {name}")))
    }

    pub fn value(&self, name: &str) -> Result<f64> {
        Ok(self.values[self.index(name)?])
    }

    /// One-sigma uncertainty from the covariance diagonal.
    pub fn sigma(&self, name: &str) -> Result<f64> {
        let i = self.index(name)?;
        Ok(self.covariance[(i, i)].max(0.0).sqrt())
    }

    pub fn reduced_chi_squared(&self) -> f64 {
        if self.degrees_of_freedom == 0 {
            f64::NAN
        } else {
            self.chi_squared / self.degrees_of_freedom as f64
        }
    }

    /// Flat `key = value` report.
    pub fn report(&self) -> String {
        let mut s = String::new();
        for (i, name) in self.names.iter().enumerate() {
            let _ = writeln!(s, "{name} = {}", self.values[i]);
            let _ = writeln!(s, "{name}_sigma = {}", self.covariance[(i, i)].max(0.0).sqrt());
        }
        let _ = writeln!(s, "residual_rms = {}", self.residual_rms);
        let _ = writeln!(s, "chi_squared = {}", self.chi_squared);
        let _ = writeln!(s, "degrees_of_freedom = {}", self.degrees_of_freedom);
        let _ = writeln!(s, "iterations = {}", self.iterations);
        let _ = writeln!(s, "converged = {}", self.converged);
        let weighting = match self.weighting {
            Weighting::Uniform => "uniform",
            Weighting::Poisson => "poisson",
        };
        let _ = writeln!(s, "weighting = \"{weighting}\"");
        s
    }

    /// Writes `x,observed,fitted,residual`.
    pub fn write_residuals_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "observed", "fitted", "residual"])?;
        for &(x, o, f) in &self.points {
            w.write_record([x.to_string(), o.to_string(), f.to_string(), (o - f).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sample mean and sample (n - 1) standard deviation.
pub fn sample_mean_std(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::InvalidInput("need at least two values".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std() {
        let (m, s) = sample_mean_std(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(sample_mean_std(&[1.0]).is_err());
    }
}
