//! Uncertainty of the expected dip visibility.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::hom::{combined_visibility, hom_visibility_max};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertainValue {
    pub value: f64,
    pub sigma: f64,
}

impl UncertainValue {
    pub fn new(value: f64, sigma: f64) -> Self {
        Self { value, sigma }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, sigma: 0.0 }
    }

    fn check(&self, name: &str) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite() && self.value.is_finite()) {
            return Err(Error::InvalidInput(format!("{name}: invalid uncertainty {}", self.sigma)));
        }
        Ok(())
    }
}

/// Derivative of the splitter-limited visibility with respect to `eta`.
pub fn visibility_max_slope(eta: f64) -> f64 {
    let d = 1.0 - 2.0 * eta + 2.0 * eta * eta;
    2.0 * (1.0 - 2.0 * eta) / (d * d)
}

/// First-order propagation through `V = V_source * V_max(eta)`.
pub fn propagate_visibility_uncertainty(eta: UncertainValue, source: UncertainValue) -> Result<UncertainValue> {
    eta.check("splitting ratio")?;
    source.check("source visibility")?;
    let d_eta = source.value * visibility_max_slope(eta.value);
    let d_src = hom_visibility_max(eta.value);
    let var = (d_eta * eta.sigma).powi(2) + (d_src * source.sigma).powi(2);
    Ok(UncertainValue::new(combined_visibility(source.value, eta.value), var.sqrt()))
}

/// Mean and spread of `V` over Gaussian inputs, estimated from a
/// Latin-hypercube sample of size `samples`.
pub fn sample_visibility_uncertainty(
    eta: UncertainValue,
    source: UncertainValue,
    samples: usize,
    seed: u64,
) -> Result<UncertainValue> {
    eta.check("splitting ratio")?;
    source.check("source visibility")?;
    if samples < 2 {
        return Err(Error::InvalidInput("need at least two samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let etas = stratified(eta, samples, &mut rng);
    let sources = stratified(source, samples, &mut rng);
    let draws: Vec<f64> = etas.iter().zip(&sources).map(|(&e, &s)| combined_visibility(s, e)).collect();
    let (mean, sigma) = super::sample_mean_std(&draws)?;
    Ok(UncertainValue::new(mean, sigma))
}

fn stratified(x: UncertainValue, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if x.sigma == 0.0 {
        return vec![x.value; n];
    }
    let unit = Normal::standard();
    let mut out: Vec<f64> =
        (0..n).map(|i| x.value + x.sigma * unit.inverse_cdf((i as f64 + rng.random::<f64>()) / n as f64)).collect();
    out.shuffle(rng);
    out
}
