//! Single-pair HOM interference at a lossless splitter.

use super::scan::{DelayScan, ValueKind};
use super::wavepacket::TwoPhotonState;
use crate::error::{Error, Result};

pub(crate) fn check_ratio(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidInput(format!("splitting ratio {eta} outside [0, 1]")));
    }
    Ok(())
}

/// Highest dip visibility reachable with cross-coupled power fraction `eta`:
/// `2 eta (1 - eta) / (1 - 2 eta + 2 eta^2)`.
///
/// Evaluated as `2ab / (a^2 + b^2)` with `a = eta`, `b = 1 - eta`, which is
/// symmetric in its operands.
pub fn hom_visibility_max(eta: f64) -> f64 {
    let (a, b) = (eta, 1.0 - eta);
    2.0 * a * b / (a * a + b * b)
}

/// Source visibility degraded by an unbalanced splitter.
pub fn combined_visibility(source_visibility: f64, eta: f64) -> f64 {
    source_visibility * hom_visibility_max(eta)
}

/// Coincidence level far from the dip: `eta^2 + (1 - eta)^2`.
pub fn coincidence_baseline(eta: f64) -> f64 {
    eta * eta + (1.0 - eta) * (1.0 - eta)
}

/// Probability that the two photons leave through different ports, given
/// their indistinguishability.
pub fn coincidence_probability(eta: f64, indistinguishability: f64) -> f64 {
    coincidence_baseline(eta) - 2.0 * eta * (1.0 - eta) * indistinguishability
}

/// Two-photon output distribution. The signal enters port 0 and the idler
/// port 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputPatterns {
    pub both_in_port0: f64,
    pub both_in_port1: f64,
    /// Signal in port 0 and idler in port 1 (both transmitted), for the
    /// distinguishable part; the interfering part is split evenly.
    pub coincidence_bar: f64,
    /// Signal in port 1 and idler in port 0 (both crossed).
    pub coincidence_cross: f64,
}

impl OutputPatterns {
    pub fn coincidence(&self) -> f64 {
        self.coincidence_bar + self.coincidence_cross
    }

    pub fn total(&self) -> f64 {
        self.both_in_port0 + self.both_in_port1 + self.coincidence_bar + self.coincidence_cross
    }
}

/// Output pattern probabilities for a pair with indistinguishability
/// `overlap`, modelled as a mixture of a fully interfering and a fully
/// distinguishable pair.
pub fn output_patterns(eta: f64, overlap: f64) -> OutputPatterns {
    let (r, t) = (eta, 1.0 - eta);
    let bunched = r * t * (1.0 + overlap);
    // Interfering coincidences: |t^2 - r^2|^2 = (1 - 2 eta)^2.
    let interfering = (t - r) * (t - r);
    OutputPatterns {
        both_in_port0: bunched,
        both_in_port1: bunched,
        coincidence_bar: (1.0 - overlap) * t * t + 0.5 * overlap * interfering,
        coincidence_cross: (1.0 - overlap) * r * r + 0.5 * overlap * interfering,
    }
}

/// Coincidence probability versus delay.
///
/// With `normalized`, values are divided by the far-delay baseline, so the
/// dip reaches `1 - V` with `V = 2 eta (1-eta) M^2 / (eta^2 + (1-eta)^2)` for
/// spectrally identical photons.
pub fn coincidence_curve(state: &TwoPhotonState, eta: f64, delays_ps: &[f64], normalized: bool) -> Result<DelayScan> {
    state.validate()?;
    check_ratio(eta)?;
    let baseline = coincidence_baseline(eta);
    let values = delays_ps
        .iter()
        .map(|&tau| {
            let p = coincidence_probability(eta, state.spectral_overlap(tau));
            if normalized {
                p / baseline
            } else {
                p
            }
        })
        .collect();
    let mut scan = DelayScan::new(delays_ps.to_vec(), values, ValueKind::Probability)?;
    scan.normalized = normalized;
    Ok(scan)
}

/// Normalised dip visibility of a single pair.
pub fn single_pair_visibility(state: &TwoPhotonState, eta: f64) -> f64 {
    hom_visibility_max(eta) * state.spectral_overlap(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spot_values() {
        assert_eq!(hom_visibility_max(0.5), 1.0);
        assert_eq!(hom_visibility_max(0.0), 0.0);
        assert_eq!(hom_visibility_max(1.0), 0.0);
        assert!((hom_visibility_max(0.546) - 0.9832).abs() < 1e-4);
        assert!((combined_visibility(0.9801, 0.546) - 0.9636).abs() < 5e-4);
        assert_eq!(combined_visibility(1.0, 0.5), 1.0);
    }

    #[test]
    fn perfect_bunching() {
        let s = TwoPhotonState::degenerate(1542.22, 1.8, 1.0);
        let scan = coincidence_curve(&s, 0.5, &[0.0, 50.0], false).unwrap();
        assert!(scan.values[0].abs() < 1e-15);
        let norm = coincidence_curve(&s, 0.37, &[-80.0, 80.0], true).unwrap();
        assert!(norm.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn expected_dip_depth() {
        let s = TwoPhotonState::degenerate(1542.22, 1.8, 1.0).with_source_visibility(0.9801);
        let scan = coincidence_curve(&s, 0.546, &[0.0], true).unwrap();
        assert!((1.0 - scan.values[0] - 0.9636).abs() < 5e-4);
        assert!((1.0 - scan.values[0] - single_pair_visibility(&s, 0.546)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_ratio() {
        let s = TwoPhotonState::degenerate(1542.22, 1.8, 1.0);
        assert!(coincidence_curve(&s, 1.2, &[0.0], false).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_under_port_swap(k in 0u32..=(1 << 20)) {
            let eta = k as f64 / (1u32 << 20) as f64;
            prop_assert_eq!(hom_visibility_max(eta), hom_visibility_max(1.0 - eta));
        }

        #[test]
        fn patterns_conserve_probability(eta in 0.0..=1.0f64, overlap in 0.0..=1.0f64) {
            let p = output_patterns(eta, overlap);
            prop_assert!((p.total() - 1.0).abs() < 1e-9);
            prop_assert!((p.coincidence() - coincidence_probability(eta, overlap)).abs() < 1e-12);
            prop_assert!(p.both_in_port0 >= 0.0 && p.coincidence_bar >= 0.0 && p.coincidence_cross >= 0.0);
        }

        #[test]
        fn dip_floor_non_negative(eta in 0.0..=1.0f64, m in 0.0..=1.0f64, tau in -20.0..20.0f64) {
            let s = TwoPhotonState::degenerate(1542.22, 1.8, m);
            let scan = coincidence_curve(&s, eta, &[tau], true).unwrap();
            prop_assert!(scan.values[0] >= -1e-15);
            prop_assert!(hom_visibility_max(eta) <= 1.0);
        }

        #[test]
        fn combined_monotone_in_source(eta in 0.0..=1.0f64, a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(combined_visibility(lo, eta) <= combined_visibility(hi, eta));
        }
    }
}
