//! Shared fixtures for the criterion benches.

use lnoi_hom::hom::TwoPhotonState;

pub fn uniform_grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| start + (stop - start) * i as f64 / (points - 1) as f64).collect()
}

/// Degenerate 1.8 nm photons at 1542.22 nm with 0.9801 source visibility.
pub fn reproduction_state() -> TwoPhotonState {
    TwoPhotonState::degenerate(1542.22, 1.8, 1.0).with_source_visibility(0.9801)
}
