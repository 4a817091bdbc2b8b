//! Monte Carlo coincidence counting with a pulsed pair source and threshold
//! detectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::interference::check_ratio;
use super::multipair::{port_distribution, PairStatistics, MAX_ENUMERATED_PAIRS};
use super::scan::DelayScan;
use super::wavepacket::TwoPhotonState;
use crate::error::{Error, Result};

/// Pulse period of an 80 MHz mode-locked pump.
pub const DEFAULT_REPETITION_PERIOD_NS: f64 = 12.5;

const MAX_SAMPLED_PAIRS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceModel {
    pub mean_pairs: f64,
    pub statistics: PairStatistics,
    pub pulses_per_point: u64,
    pub repetition_period_ns: f64,
}

impl SourceModel {
    pub fn new(mean_pairs: f64, pulses_per_point: u64) -> Self {
        Self {
            mean_pairs,
            statistics: PairStatistics::default(),
            pulses_per_point,
            repetition_period_ns: DEFAULT_REPETITION_PERIOD_NS,
        }
    }

    pub fn with_statistics(mut self, statistics: PairStatistics) -> Self {
        self.statistics = statistics;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mean_pairs >= 0.0 && self.mean_pairs.is_finite()) {
            return Err(Error::InvalidInput(format!("mean pair number {} must be non-negative", self.mean_pairs)));
        }
        if self.mean_pairs > 1.0 {
            return Err(Error::InvalidInput(format!(
                "mean pair number {} is far outside the pair regime",
                self.mean_pairs
            )));
        }
        if self.pulses_per_point == 0 {
            return Err(Error::InvalidInput("need at least one pulse per point".into()));
        }
        if !(self.repetition_period_ns > 0.0 && self.repetition_period_ns.is_finite()) {
            return Err(Error::InvalidInput("repetition period must be positive".into()));
        }
        Ok(())
    }
}

/// Two threshold detectors, one per output port.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    pub efficiency: [f64; 2],
    pub dead_time_ns: f64,
    pub dark_count_probability: f64,
}

impl DetectorModel {
    pub fn new(efficiency: f64, dead_time_ns: f64) -> Self {
        Self { efficiency: [efficiency; 2], dead_time_ns, dark_count_probability: 0.0 }
    }

    /// Unit efficiency, no dead time, no dark counts.
    pub fn ideal() -> Self {
        Self::new(1.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        for e in self.efficiency {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::InvalidInput(format!("detector efficiency {e} outside [0, 1]")));
            }
        }
        if !(0.0..=1.0).contains(&self.dark_count_probability) {
            return Err(Error::InvalidInput(format!(
                "dark-count probability {} outside [0, 1]",
                self.dark_count_probability
            )));
        }
        if !(self.dead_time_ns >= 0.0 && self.dead_time_ns.is_finite()) {
            return Err(Error::InvalidInput("dead time must be non-negative".into()));
        }
        Ok(())
    }

    /// Probability that `channel` clicks when `photons` reach it.
    pub fn click_probability(&self, channel: usize, photons: usize) -> f64 {
        let miss = (1.0 - self.efficiency[channel]).powi(photons as i32);
        1.0 - (1.0 - self.dark_count_probability) * miss
    }
}

/// Simulated coincidence counts versus delay.
///
/// Each delay point draws from its own random stream derived from `seed`,
/// so points run in parallel and the result is reproducible.
pub fn simulate_counts(
    state: &TwoPhotonState,
    eta: f64,
    source: &SourceModel,
    detectors: &DetectorModel,
    delays_ps: &[f64],
    seed: u64,
) -> Result<DelayScan> {
    state.validate()?;
    check_ratio(eta)?;
    source.validate()?;
    detectors.validate()?;
    let pair_cdf = cumulative(source);
    let counts: Vec<u64> = delays_ps
        .par_iter()
        .enumerate()
        .map(|(idx, &tau)| {
            let overlap = state.spectral_overlap(tau);
            let mut tables = Vec::with_capacity(MAX_ENUMERATED_PAIRS);
            for k in 1..=MAX_ENUMERATED_PAIRS {
                let dist = port_distribution(k, source.statistics, eta, overlap)?;
                tables.push(running_sum(&dist));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(idx as u64);
            Ok(count_point(&mut rng, &pair_cdf, &tables, eta, source, detectors))
        })
        .collect::<Result<_>>()?;
    DelayScan::from_counts(delays_ps.to_vec(), &counts)
}

fn cumulative(source: &SourceModel) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = (0..MAX_SAMPLED_PAIRS)
        .map(|k| {
            acc += source.statistics.probability(source.mean_pairs, k);
            acc
        })
        .collect();
    *cdf.last_mut().unwrap() = 1.0;
    cdf
}

fn running_sum(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = p
        .iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect();
    *out.last_mut().unwrap() = 1.0;
    out
}

fn draw(rng: &mut ChaCha8Rng, cdf: &[f64]) -> usize {
    let u: f64 = rng.random();
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

fn count_point(
    rng: &mut ChaCha8Rng,
    pair_cdf: &[f64],
    tables: &[Vec<f64>],
    eta: f64,
    source: &SourceModel,
    detectors: &DetectorModel,
) -> u64 {
    let dead_pulses = detectors.dead_time_ns / source.repetition_period_ns;
    let mut last_fire: [Option<u64>; 2] = [None, None];
    let mut coincidences = 0;
    let dark = detectors.dark_count_probability > 0.0;
    for pulse in 0..source.pulses_per_point {
        let k = draw(rng, pair_cdf);
        if k == 0 && !dark {
            continue;
        }
        let (n0, n1) = if k == 0 {
            (0, 0)
        } else if k <= MAX_ENUMERATED_PAIRS {
            let n0 = draw(rng, &tables[k - 1]);
            (n0, 2 * k - n0)
        } else {
            // Classical routing for rare higher-order events.
            let mut n0 = 0;
            for _ in 0..k {
                if !rng.random_bool(eta) {
                    n0 += 1;
                }
                if rng.random_bool(eta) {
                    n0 += 1;
                }
            }
            (n0, 2 * k - n0)
        };
        let mut fired = [false; 2];
        for (ch, n) in [n0, n1].into_iter().enumerate() {
            if n == 0 && !dark {
                continue;
            }
            let p = detectors.click_probability(ch, n);
            if p > 0.0 && rng.random::<f64>() < p {
                let alive = match last_fire[ch] {
                    Some(prev) => (pulse - prev) as f64 >= dead_pulses,
                    None => true,
                };
                if alive {
                    last_fire[ch] = Some(pulse);
                    fired[ch] = true;
                }
            }
        }
        if fired[0] && fired[1] {
            coincidences += 1;
        }
    }
    coincidences
}
