//! Lumped coupled-mode model of a lossless symmetric directional coupler.
//!
//! Power launched into one waveguide crosses over as `sin^2(theta)` with
//! `theta = kappa(lambda) * (L_I + L_0)`, where `L_0` lumps the coupling that
//! happens in the input and output bends. The coupling strength equals
//! `pi * dn / lambda` for a supermode index splitting `dn`; its wavelength
//! dependence is linear around a reference point,
//! `kappa(lambda) = kappa_0 * (1 + g * (lambda - lambda_0))`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Wavelengths accepted by the dispersion model, in nanometres.
pub const SUPPORTED_BAND_NM: (f64, f64) = (1300.0, 1700.0);

/// `[[cos t, -i sin t], [-i sin t, cos t]]`, rows indexed by output port.
pub type TransferMatrix = [[Complex64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplerDevice {
    /// Full-transfer length at the reference wavelength.
    pub coupling_length_um: f64,
    pub reference_wavelength_nm: f64,
    /// Relative coupling dispersion `d ln(kappa) / d(lambda)` in 1/nm.
    pub dispersion_slope_per_nm: f64,
    pub interaction_length_um: f64,
    pub bend_offset_um: f64,
}

impl CouplerDevice {
    pub fn new(coupling_length_um: f64, reference_wavelength_nm: f64) -> Result<Self> {
        let d = Self {
            coupling_length_um,
            reference_wavelength_nm,
            dispersion_slope_per_nm: 0.0,
            interaction_length_um: 0.0,
            bend_offset_um: 0.0,
        };
        d.validate()?;
        Ok(d)
    }

    /// Device whose coupling follows a supermode splitting `delta_n` at
    /// `wavelength_nm`.
    pub fn from_delta_n(delta_n: f64, wavelength_nm: f64) -> Result<Self> {
        if !(delta_n > 0.0) {
            return Err(Error::InfiniteCouplingLength { delta_n });
        }
        Self::new(wavelength_nm * 1e-3 / (2.0 * delta_n), wavelength_nm)
    }

    /// Linear coupling dispersion through two `(wavelength_nm, delta_n)`
    /// samples, referenced at their midpoint.
    pub fn from_delta_n_samples(a: (f64, f64), b: (f64, f64)) -> Result<Self> {
        if a.0 == b.0 {
            return Err(Error::InvalidInput("calibration wavelengths must differ".into()));
        }
        if !(a.1 > 0.0 && b.1 > 0.0) {
            return Err(Error::InfiniteCouplingLength { delta_n: a.1.min(b.1) });
        }
        let kappa = |(l, dn): (f64, f64)| PI * dn / (l * 1e-3);
        let (ka, kb) = (kappa(a), kappa(b));
        let mid = 0.5 * (ka + kb);
        let slope = (kb - ka) / ((b.0 - a.0) * mid);
        let reference = 0.5 * (a.0 + b.0);
        Ok(Self::new(FRAC_PI_2 / mid, reference)?.with_dispersion_slope(slope))
    }

    pub fn with_interaction_length(self, interaction_length_um: f64) -> Self {
        Self { interaction_length_um, ..self }
    }

    pub fn with_bend_offset(self, bend_offset_um: f64) -> Self {
        Self { bend_offset_um, ..self }
    }

    pub fn with_dispersion_slope(self, dispersion_slope_per_nm: f64) -> Self {
        Self { dispersion_slope_per_nm, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = SUPPORTED_BAND_NM;
        if !(self.coupling_length_um > 0.0 && self.coupling_length_um.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "coupling length {} um must be positive",
                self.coupling_length_um
            )));
        }
        if !(lo..=hi).contains(&self.reference_wavelength_nm) {
            return Err(Error::InvalidInput(format!(
                "reference wavelength {} nm outside [{lo}, {hi}] nm",
                self.reference_wavelength_nm
            )));
        }
        if !(self.interaction_length_um >= 0.0) || !(self.bend_offset_um >= 0.0) {
            return Err(Error::InvalidInput("interaction length and bend offset must be non-negative".into()));
        }
        if !self.dispersion_slope_per_nm.is_finite() {
            return Err(Error::InvalidInput("dispersion slope must be finite".into()));
        }
        Ok(())
    }

    /// Supermode index splitting at the reference wavelength.
    pub fn reference_delta_n(&self) -> f64 {
        self.reference_wavelength_nm * 1e-3 / (2.0 * self.coupling_length_um)
    }

    fn dispersion_factor(&self, wavelength_nm: f64) -> f64 {
        1.0 + self.dispersion_slope_per_nm * (wavelength_nm - self.reference_wavelength_nm)
    }

    /// Index splitting implied by the coupling strength at `wavelength_nm`.
    pub fn delta_n(&self, wavelength_nm: f64) -> f64 {
        self.dispersion_factor(wavelength_nm) * wavelength_nm * 1e-3 / (2.0 * self.coupling_length_um)
    }

    fn check_band(&self, wavelength_nm: f64) -> Result<()> {
        let (lo, hi) = SUPPORTED_BAND_NM;
        if !(lo..=hi).contains(&wavelength_nm) {
            return Err(Error::InvalidInput(format!("wavelength {wavelength_nm} nm outside [{lo}, {hi}] nm")));
        }
        if self.dispersion_factor(wavelength_nm) <= 0.0 {
            return Err(Error::InvalidInput(format!("dispersion model gives no coupling at {wavelength_nm} nm")));
        }
        Ok(())
    }

    /// Coupling coefficient in 1/um.
    pub fn kappa(&self, wavelength_nm: f64) -> Result<f64> {
        self.check_band(wavelength_nm)?;
        Ok(FRAC_PI_2 / self.coupling_length_um * self.dispersion_factor(wavelength_nm))
    }

    pub fn coupling_length_at(&self, wavelength_nm: f64) -> Result<f64> {
        Ok(FRAC_PI_2 / self.kappa(wavelength_nm)?)
    }

    pub fn effective_length_um(&self) -> f64 {
        self.interaction_length_um + self.bend_offset_um
    }

    /// Accumulated coupling phase `kappa * (L_I + L_0)`.
    pub fn coupling_phase(&self, wavelength_nm: f64) -> Result<f64> {
        Ok(self.kappa(wavelength_nm)? * self.effective_length_um())
    }

    pub fn transfer_matrix(&self, wavelength_nm: f64) -> Result<TransferMatrix> {
        let theta = self.coupling_phase(wavelength_nm)?;
        Ok(transfer_matrix_for_phase(theta))
    }

    /// Cross-port power fraction.
    pub fn splitting_ratio(&self, wavelength_nm: f64) -> Result<f64> {
        Ok(self.coupling_phase(wavelength_nm)?.sin().powi(2))
    }

    /// Smallest non-negative bend offset giving `target` at the reference
    /// wavelength.
    pub fn bend_offset_for_ratio(&self, target: f64) -> Result<f64> {
        check_ratio(target)?;
        let kappa = self.kappa(self.reference_wavelength_nm)?;
        let now = kappa * self.interaction_length_um;
        let first_branch = (now / FRAC_PI_2).floor() as u32;
        for order in first_branch..first_branch + 3 {
            let theta = branch_phase(target, order);
            if theta >= now - 1e-12 {
                return Ok(((theta - now) / kappa).max(0.0));
            }
        }
        unreachable!("a later branch always reaches the target")
    }

    /// Interaction length realising `target` on coupling branch `order`.
    ///
    /// Branch `m` spans phases `[m pi/2, (m+1) pi/2]`; the splitting ratio rises
    /// on even branches and falls on odd ones, so each branch holds exactly one
    /// solution.
    pub fn length_for_ratio(&self, target: f64, order: u32) -> Result<f64> {
        check_ratio(target)?;
        let kappa = self.kappa(self.reference_wavelength_nm)?;
        let length = branch_phase(target, order) / kappa - self.bend_offset_um;
        if length < -1e-9 {
            return Err(Error::UnreachableTarget {
                target,
                order,
                reason: format!(
                    "bend offset {} um already exceeds the {:.3} um the branch needs",
                    self.bend_offset_um,
                    length + self.bend_offset_um
                ),
            });
        }
        Ok(length.max(0.0))
    }

    /// Branch index of the device's current phase at the reference wavelength.
    pub fn coupling_order(&self) -> Result<u32> {
        Ok((self.coupling_phase(self.reference_wavelength_nm)? / FRAC_PI_2).floor() as u32)
    }

    /// Splitting ratio tabulated from `start_nm` to `end_nm` inclusive.
    pub fn bandwidth_scan(&self, start_nm: f64, end_nm: f64, step_nm: f64) -> Result<Vec<(f64, f64)>> {
        if !(step_nm > 0.0) || end_nm < start_nm {
            return Err(Error::InvalidInput("scan needs start <= end and a positive step".into()));
        }
        let count = ((end_nm - start_nm) / step_nm + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| {
                let l = start_nm + k as f64 * step_nm;
                Ok((l, self.splitting_ratio(l)?))
            })
            .collect()
    }

    /// Width of the wavelength window around the reference in which the
    /// splitting ratio stays within `tolerance` of its reference value. Edges
    /// are searched up to `max_half_width_nm` away and refined by bisection.
    pub fn ratio_bandwidth(&self, tolerance: f64, max_half_width_nm: f64) -> Result<f64> {
        let l0 = self.reference_wavelength_nm;
        let eta0 = self.splitting_ratio(l0)?;
        let inside = |l: f64| -> Result<bool> { Ok((self.splitting_ratio(l)? - eta0).abs() < tolerance) };
        let mut edges = [0.0; 2];
        for (slot, dir) in edges.iter_mut().zip([-1.0, 1.0]) {
            let step = 0.05;
            let mut good = 0.0;
            let mut bad = None;
            let mut d = step;
            while d <= max_half_width_nm + 1e-12 {
                if inside(l0 + dir * d)? {
                    good = d;
                    d += step;
                } else {
                    bad = Some(d);
                    break;
                }
            }
            *slot = match bad {
                None => max_half_width_nm,
                Some(mut hi) => {
                    let mut lo = good;
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if inside(l0 + dir * mid)? {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    lo
                }
            };
        }
        Ok(edges[0] + edges[1])
    }
}

fn check_ratio(target: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&target) {
        return Err(Error::InvalidInput(format!("splitting ratio {target} outside [0, 1]")));
    }
    Ok(())
}

/// Phase on branch `order` at which `sin^2(theta) = target`.
fn branch_phase(target: f64, order: u32) -> f64 {
    let base = target.sqrt().asin();
    let within = if order % 2 == 0 { base } else { FRAC_PI_2 - base };
    order as f64 * FRAC_PI_2 + within
}

pub fn transfer_matrix_for_phase(theta: f64) -> TransferMatrix {
    let c = Complex64::new(theta.cos(), 0.0);
    let s = Complex64::new(0.0, -theta.sin());
    [[c, s], [s, c]]
}

/// Beam-splitter matrix with cross-port power fraction `eta`, in the same
/// phase convention as [`CouplerDevice::transfer_matrix`].
pub fn splitter_matrix(eta: f64) -> TransferMatrix {
    transfer_matrix_for_phase(eta.clamp(0.0, 1.0).sqrt().asin())
}

/// Largest deviation of `U^dagger U` from the identity.
pub fn unitarity_defect(u: &TransferMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..2 {
                acc += u[k][i].conj() * u[k][j];
            }
            let expect = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc - expect).norm());
        }
    }
    worst
}

/// Writes a `(wavelength_nm, eta)` curve as CSV.
pub fn write_bandwidth_csv<W: Write>(curve: &[(f64, f64)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["wavelength_nm", "eta"])?;
    for (l, eta) in curve {
        w.write_record(&[l.to_string(), eta.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a curve written by [`write_bandwidth_csv`].
pub fn read_bandwidth_csv<R: std::io::Read>(reader: R) -> Result<Vec<(f64, f64)>> {
    let cols = crate::table::read_columns(reader, &["wavelength_nm", "eta"])?;
    Ok(cols[0].iter().copied().zip(cols[1].iter().copied()).collect())
}
