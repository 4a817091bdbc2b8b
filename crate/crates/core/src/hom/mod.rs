//! Two-photon interference at the coupler output.

pub mod counting;
pub mod interference;
pub mod multipair;
pub mod scan;
pub mod wavepacket;

pub use counting::{simulate_counts, DetectorModel, SourceModel, DEFAULT_REPETITION_PERIOD_NS};
pub use interference::{
    coincidence_baseline, coincidence_curve, coincidence_probability, combined_visibility, hom_visibility_max,
    output_patterns, single_pair_visibility, OutputPatterns,
};
pub use multipair::{
    coincidence_rate, multi_pair_visibility, multi_pair_visibility_with, port_distribution, PairStatistics,
    MAX_ENUMERATED_PAIRS, MAX_TRUNCATED_MEAN_PAIRS,
};
pub use scan::{DelayLine, DelayScan, StagePass, ValueKind, SPEED_OF_LIGHT_UM_PER_PS};
pub use wavepacket::{
    PhotonWavepacket, SpectralShape, TwoPhotonState, GAUSSIAN_FWHM_PER_SIGMA, SPEED_OF_LIGHT_NM_PER_PS,
};
