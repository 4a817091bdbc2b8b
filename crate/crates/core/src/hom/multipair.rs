//! Multi-pair corrections to the dip visibility.
//!
//! Up to two pairs per pulse are propagated exactly: every pair contributes
//! creation operators on (output port, internal mode) and the product is
//! expanded into Fock amplitudes. The idler's internal state is
//! `sqrt(I) u + sqrt(1 - I) v` with `u` the signal's, so `I` is the
//! indistinguishability at the delay being evaluated.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::counting::DetectorModel;
use super::interference::check_ratio;
use crate::coupler::{splitter_matrix, TransferMatrix};
use crate::error::{Error, Result};

/// Largest mean pair number for which the two-pair truncation is trusted.
pub const MAX_TRUNCATED_MEAN_PAIRS: f64 = 0.1;

/// Pairs per pulse propagated with full interference.
pub const MAX_ENUMERATED_PAIRS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairStatistics {
    /// Many spectral-temporal modes: pairs in one pulse occupy distinct
    /// modes and the pair number is Poissonian.
    #[default]
    Poissonian,
    /// Single-mode squeezed vacuum: pairs share one mode and the pair
    /// number is geometric.
    Thermal,
}

impl PairStatistics {
    /// Probability of `k` pairs in a pulse with mean `mu`.
    pub fn probability(self, mu: f64, k: usize) -> f64 {
        match self {
            PairStatistics::Poissonian => {
                let mut p = (-mu).exp();
                for j in 1..=k {
                    p *= mu / j as f64;
                }
                p
            }
            PairStatistics::Thermal => (mu / (1.0 + mu)).powi(k as i32) / (1.0 + mu),
        }
    }
}

fn check_mean(mu: f64) -> Result<()> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidInput(format!("mean pair number {mu} must be non-negative")));
    }
    if mu > MAX_TRUNCATED_MEAN_PAIRS {
        return Err(Error::TruncationInvalid(mu));
    }
    Ok(())
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidInput(format!("{name} {x} outside [0, 1]")));
    }
    Ok(())
}

type Creation = Vec<(usize, Complex64)>;

/// Expands a product of creation operators into monomials keyed by the
/// sorted list of mode indices.
fn expand(factors: &[Creation]) -> BTreeMap<Vec<usize>, Complex64> {
    let mut terms: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
    terms.insert(Vec::new(), Complex64::new(1.0, 0.0));
    for f in factors {
        let mut next: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
        for (modes, c) in &terms {
            for &(m, a) in f {
                let mut key = modes.clone();
                let at = key.partition_point(|&x| x <= m);
                key.insert(at, m);
                *next.entry(key).or_default() += c * a;
            }
        }
        terms = next;
    }
    terms
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Probability that `n0` of the `2 * pairs` photons leave port 0, indexed
/// by `n0`.
pub fn port_distribution(
    pairs: usize,
    statistics: PairStatistics,
    eta: f64,
    indistinguishability: f64,
) -> Result<Vec<f64>> {
    check_ratio(eta)?;
    check_unit("indistinguishability", indistinguishability)?;
    if pairs > MAX_ENUMERATED_PAIRS + 1 {
        return Err(Error::InvalidInput(format!("{pairs} pairs exceeds the enumeration limit")));
    }
    let u = splitter_matrix(eta);
    let slots = match statistics {
        PairStatistics::Poissonian => pairs.max(1),
        PairStatistics::Thermal => 1,
    };
    let internal = 2 * slots;
    let mut factors = Vec::with_capacity(2 * pairs);
    for j in 0..pairs {
        let slot = match statistics {
            PairStatistics::Poissonian => j,
            PairStatistics::Thermal => 0,
        };
        factors.push(photon(&u, 0, &[(2 * slot, 1.0)], internal));
        factors.push(photon(
            &u,
            1,
            &[(2 * slot, indistinguishability.sqrt()), (2 * slot + 1, (1.0 - indistinguishability).sqrt())],
            internal,
        ));
    }
    let norm = match statistics {
        PairStatistics::Poissonian => 1.0,
        PairStatistics::Thermal => 1.0 / (factorial(pairs) * factorial(pairs)),
    };
    let mut dist = vec![0.0; 2 * pairs + 1];
    for (modes, c) in expand(&factors) {
        let mut weight = 1.0;
        let mut run = 1;
        for w in modes.windows(2) {
            if w[0] == w[1] {
                run += 1;
            } else {
                weight *= factorial(run);
                run = 1;
            }
        }
        weight *= factorial(run);
        let n0 = modes.iter().filter(|&&m| m < internal).count();
        dist[n0] += c.norm_sqr() * weight * norm;
    }
    Ok(dist)
}

fn photon(u: &TransferMatrix, input: usize, internal_state: &[(usize, f64)], internal: usize) -> Creation {
    let mut out = Vec::new();
    for port in 0..2 {
        for &(mode, amp) in internal_state {
            if amp != 0.0 {
                out.push((port * internal + mode, u[port][input] * amp));
            }
        }
    }
    out
}

/// Coincidence probability per pulse at a given indistinguishability.
pub fn coincidence_rate(
    mu: f64,
    statistics: PairStatistics,
    eta: f64,
    indistinguishability: f64,
    detectors: &DetectorModel,
) -> Result<f64> {
    check_mean(mu)?;
    detectors.validate()?;
    let mut rate = 0.0;
    for k in 0..=MAX_ENUMERATED_PAIRS {
        let dist = port_distribution(k, statistics, eta, indistinguishability)?;
        let pk = statistics.probability(mu, k);
        for (n0, p) in dist.iter().enumerate() {
            rate += pk * p * detectors.click_probability(0, n0) * detectors.click_probability(1, 2 * k - n0);
        }
    }
    Ok(rate)
}

/// Dip visibility `1 - C(0) / C(inf)` with detector response included.
/// `indistinguishability` is the single-pair overlap at zero delay.
pub fn multi_pair_visibility_with(
    mu: f64,
    statistics: PairStatistics,
    eta: f64,
    indistinguishability: f64,
    detectors: &DetectorModel,
) -> Result<f64> {
    let dip = coincidence_rate(mu, statistics, eta, indistinguishability, detectors)?;
    let far = coincidence_rate(mu, statistics, eta, 0.0, detectors)?;
    if far <= 0.0 {
        return Err(Error::Numerical("no coincidences away from the dip".into()));
    }
    Ok(1.0 - dip / far)
}

/// Visibility of a source whose single-pair visibility is `v1`, seen
/// through a balanced splitter with ideal threshold detectors.
pub fn multi_pair_visibility(mu: f64, v1: f64, statistics: PairStatistics) -> Result<f64> {
    check_unit("single-pair visibility", v1)?;
    multi_pair_visibility_with(mu, statistics, 0.5, v1, &DetectorModel::ideal())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hom::interference::coincidence_probability;
    use proptest::prelude::*;

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for at in 0..n {
                let mut q = p.clone();
                q.insert(at, n - 1);
                out.push(q);
            }
        }
        out
    }

    /// First-quantised reference: photons carry an input port and an
    /// internal vector; probabilities follow from sums over permutations of
    /// Gram-matrix products.
    fn reference_distribution(photons: &[(usize, Vec<f64>)], eta: f64) -> Vec<f64> {
        let n = photons.len();
        let u = splitter_matrix(eta);
        let gram = |a: usize, b: usize| -> f64 { photons[a].1.iter().zip(&photons[b].1).map(|(x, y)| x * y).sum() };
        let perms = permutations(n);
        let norm: f64 = perms
            .iter()
            .map(|p| (0..n).map(|k| if photons[k].0 == photons[p[k]].0 { gram(k, p[k]) } else { 0.0 }).product::<f64>())
            .sum();
        let assignments: Vec<Vec<usize>> =
            (0..1usize << n).map(|bits| (0..n).map(|k| (bits >> k) & 1).collect()).collect();
        let amp = |ports: &[usize]| -> Complex64 { (0..n).map(|k| u[ports[k]][photons[k].0]).product() };
        let mut dist = vec![0.0; n + 1];
        for p in &assignments {
            for q in &assignments {
                let n0p = p.iter().filter(|&&x| x == 0).count();
                let n0q = q.iter().filter(|&&x| x == 0).count();
                if n0p != n0q {
                    continue;
                }
                let overlap: f64 = perms
                    .iter()
                    .map(|s| (0..n).map(|k| if q[k] == p[s[k]] { gram(k, s[k]) } else { 0.0 }).product::<f64>())
                    .sum();
                dist[n0p] += (amp(q).conj() * amp(p)).re * overlap;
            }
        }
        dist.iter().map(|d| d / norm).collect()
    }

    fn reference_photons(pairs: usize, stats: PairStatistics, ind: f64) -> Vec<(usize, Vec<f64>)> {
        let slots = if stats == PairStatistics::Thermal { 1 } else { pairs.max(1) };
        let mut out = Vec::new();
        for j in 0..pairs {
            let s = if stats == PairStatistics::Thermal { 0 } else { j };
            let mut sig = vec![0.0; 2 * slots];
            sig[2 * s] = 1.0;
            let mut idl = vec![0.0; 2 * slots];
            idl[2 * s] = ind.sqrt();
            idl[2 * s + 1] = (1.0 - ind).sqrt();
            out.push((0, sig));
            out.push((1, idl));
        }
        out
    }

    #[test]
    fn single_pair_matches_closed_form() {
        for &(eta, ind) in &[(0.5, 1.0), (0.546, 0.9801), (0.3, 0.4), (0.5, 0.0)] {
            let d = port_distribution(1, PairStatistics::Poissonian, eta, ind).unwrap();
            assert!((d[1] - coincidence_probability(eta, ind)).abs() < 1e-12);
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn agrees_with_permanent_reference() {
        for stats in [PairStatistics::Poissonian, PairStatistics::Thermal] {
            for pairs in 1..=2 {
                for &(eta, ind) in &[(0.5, 1.0), (0.546, 0.9801), (0.27, 0.35)] {
                    let d = port_distribution(pairs, stats, eta, ind).unwrap();
                    let r = reference_distribution(&reference_photons(pairs, stats, ind), eta);
                    for (a, b) in d.iter().zip(&r) {
                        assert!((a - b).abs() < 1e-12, "{stats:?} {pairs} {eta} {ind}: {d:?} vs {r:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn double_pair_bunching() {
        // |2,2> on a balanced splitter never gives an odd split.
        let d = port_distribution(2, PairStatistics::Thermal, 0.5, 1.0).unwrap();
        assert!(d[1].abs() < 1e-15 && d[3].abs() < 1e-15);
        assert!((d[2] - 0.25).abs() < 1e-12);
        assert!((d[0] - 0.375).abs() < 1e-12);
    }

    #[test]
    fn single_pair_limit() {
        for stats in [PairStatistics::Poissonian, PairStatistics::Thermal] {
            for v1 in [1.0, 0.9801, 0.6] {
                let v = multi_pair_visibility(1e-8, v1, stats).unwrap();
                assert!((v - v1).abs() < 1e-6, "{v} vs {v1}");
            }
        }
    }

    #[test]
    fn reference_visibility_at_low_mean() {
        let mu = 0.01;
        let stats = PairStatistics::Poissonian;
        let rate = |ind: f64| -> f64 {
            (0..=2)
                .map(|k| {
                    let r = reference_distribution(&reference_photons(k, stats, ind), 0.5);
                    let pk = stats.probability(mu, k);
                    r.iter().enumerate().map(|(n0, p)| if n0 > 0 && 2 * k - n0 > 0 { pk * p } else { 0.0 }).sum::<f64>()
                })
                .sum()
        };
        let expected = 1.0 - rate(1.0) / rate(0.0);
        let v = multi_pair_visibility(mu, 1.0, stats).unwrap();
        assert!((v - expected).abs() < 1e-9, "{v} vs {expected}");
        assert!(v < 1.0);
    }

    #[test]
    fn truncation_bound() {
        assert!(matches!(
            multi_pair_visibility(0.2, 1.0, PairStatistics::Poissonian),
            Err(Error::TruncationInvalid(_))
        ));
        assert!(multi_pair_visibility(-0.1, 1.0, PairStatistics::Poissonian).is_err());
        assert!(multi_pair_visibility(0.01, 1.1, PairStatistics::Poissonian).is_err());
    }

    #[test]
    fn statistics_normalised() {
        for stats in [PairStatistics::Poissonian, PairStatistics::Thermal] {
            let s: f64 = (0..200).map(|k| stats.probability(0.3, k)).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn distributions_conserve_probability(pairs in 0usize..=2, eta in 0.0..=1.0f64, ind in 0.0..=1.0f64, thermal: bool) {
            let stats = if thermal { PairStatistics::Thermal } else { PairStatistics::Poissonian };
            let d = port_distribution(pairs, stats, eta, ind).unwrap();
            prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(d.iter().all(|&p| p >= -1e-12));
        }

        #[test]
        fn more_pairs_lower_visibility(v1 in 0.5..=1.0f64, thermal: bool) {
            let stats = if thermal { PairStatistics::Thermal } else { PairStatistics::Poissonian };
            let lo = multi_pair_visibility(0.01, v1, stats).unwrap();
            let hi = multi_pair_visibility(0.05, v1, stats).unwrap();
            prop_assert!(hi < lo);
        }
    }
}
