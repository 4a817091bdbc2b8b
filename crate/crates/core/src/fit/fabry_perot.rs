//! Propagation loss from Fabry-Perot fringe contrast.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FabryPerotLoss {
    pub alpha_db_per_cm: f64,
    /// Facet reflectivity reduced by one pass of propagation loss.
    pub effective_reflectivity: f64,
    pub facet_reflectivity: f64,
    /// Set when the contrast exceeds what lossless facets allow.
    pub negative_loss: bool,
}

/// Normal-incidence Fresnel reflectivity against air.
pub fn facet_reflectivity(n_eff: f64) -> f64 {
    ((n_eff - 1.0) / (n_eff + 1.0)).powi(2)
}

/// Fringe contrast of a lossless cavity with facet reflectivity `r`.
pub fn lossless_contrast(r: f64) -> f64 {
    2.0 * r / (1.0 + r * r)
}

/// Loss in dB/cm from contrast `k = (Tmax - Tmin) / (Tmax + Tmin)`, facet
/// reflectivity `r` and length `length_cm`.
pub fn fabry_perot_loss(k: f64, r: f64, length_cm: f64) -> Result<FabryPerotLoss> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::InvalidInput(format!("contrast {k} outside (0, 1)")));
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidInput(format!("reflectivity {r} outside (0, 1)")));
    }
    if !(length_cm > 0.0 && length_cm.is_finite()) {
        return Err(Error::InvalidInput(format!("length {length_cm} cm must be positive")));
    }
    let effective = (1.0 - (1.0 - k * k).sqrt()) / k;
    let alpha = -(10.0 / length_cm) * (effective / r).log10();
    Ok(FabryPerotLoss {
        alpha_db_per_cm: alpha,
        effective_reflectivity: effective,
        facet_reflectivity: r,
        negative_loss: alpha < 0.0,
    })
}

/// Airy transmission at round-trip phase `phase`.
pub fn airy_transmission(phase: f64, r: f64, alpha_db_per_cm: f64, length_cm: f64) -> f64 {
    let g = 10f64.powf(-alpha_db_per_cm * length_cm / 10.0);
    let re = r * g;
    let s = (phase / 2.0).sin();
    (1.0 - r).powi(2) * g / ((1.0 - re).powi(2) + 4.0 * re * s * s)
}

/// Transmission sampled over `fringes` periods with `samples_per_fringe`
/// points each; returns `(phase, transmission)`.
pub fn synthetic_fringes(
    r: f64,
    alpha_db_per_cm: f64,
    length_cm: f64,
    samples_per_fringe: usize,
    fringes: usize,
) -> Vec<(f64, f64)> {
    let n = samples_per_fringe.max(2) * fringes.max(1);
    (0..=n)
        .map(|i| {
            let phase = 2.0 * PI * i as f64 / samples_per_fringe.max(2) as f64;
            (phase, airy_transmission(phase, r, alpha_db_per_cm, length_cm))
        })
        .collect()
}

/// `(Tmax - Tmin) / (Tmax + Tmin)` over the samples.
pub fn fringe_contrast(transmission: &[f64]) -> Result<f64> {
    let (lo, hi) = transmission.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
    if !(lo.is_finite() && hi.is_finite()) || hi + lo <= 0.0 {
        return Err(Error::InvalidInput("no usable transmission samples".into()));
    }
    Ok((hi - lo) / (hi + lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lossless_identity() {
        let r = facet_reflectivity(1.9);
        let out = fabry_perot_loss(lossless_contrast(r), r, 1.0).unwrap();
        assert!(out.alpha_db_per_cm.abs() < 1e-12);
    }

    #[test]
    fn fresnel() {
        assert!((facet_reflectivity(1.5) - 0.04).abs() < 1e-15);
    }

    #[test]
    fn roundtrip() {
        let r = facet_reflectivity(1.9);
        let t: Vec<f64> = synthetic_fringes(r, 4.85, 1.0, 64, 4).iter().map(|p| p.1).collect();
        let k = fringe_contrast(&t).unwrap();
        let out = fabry_perot_loss(k, r, 1.0).unwrap();
        assert!((out.alpha_db_per_cm - 4.85).abs() < 1e-9);
        assert!(!out.negative_loss);
    }

    #[test]
    fn excess_contrast_flags_negative_loss() {
        let r = facet_reflectivity(1.9);
        let out = fabry_perot_loss(lossless_contrast(r) * 1.05, r, 1.0).unwrap();
        assert!(out.negative_loss && out.alpha_db_per_cm < 0.0);
    }

    #[test]
    fn bad_inputs() {
        assert!(fabry_perot_loss(0.0, 0.1, 1.0).is_err());
        assert!(fabry_perot_loss(0.2, 1.0, 1.0).is_err());
        assert!(fabry_perot_loss(0.2, 0.1, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip_over_range(alpha in 1.0..10.0f64, len in 0.3..2.0f64, n in 1.7..2.3f64) {
            let r = facet_reflectivity(n);
            let t: Vec<f64> = synthetic_fringes(r, alpha, len, 32, 3).iter().map(|p| p.1).collect();
            let out = fabry_perot_loss(fringe_contrast(&t).unwrap(), r, len).unwrap();
            prop_assert!((out.alpha_db_per_cm / alpha - 1.0).abs() < 2e-3);
        }

        #[test]
        fn lower_contrast_more_loss(a in 0.01..0.2f64, b in 0.01..0.2f64) {
            let r = 0.1;
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-9);
            let al = fabry_perot_loss(lo, r, 1.0).unwrap();
            let ah = fabry_perot_loss(hi, r, 1.0).unwrap();
            prop_assert!(al.alpha_db_per_cm > ah.alpha_db_per_cm);
            prop_assert!(al.effective_reflectivity < ah.effective_reflectivity);
        }
    }
}
