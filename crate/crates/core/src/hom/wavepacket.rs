use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Speed of light in nanometres per picosecond.
pub const SPEED_OF_LIGHT_NM_PER_PS: f64 = 299_792.458;

/// FWHM of a Gaussian intensity profile divided by its standard deviation.
pub const GAUSSIAN_FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpectralShape {
    #[default]
    Gaussian,
}

/// Single-photon spectral wavepacket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonWavepacket {
    pub center_wavelength_nm: f64,
    /// Intensity FWHM in wavelength.
    pub bandwidth_nm: f64,
    pub shape: SpectralShape,
    /// Arrival-time offset added to the scanned delay.
    pub delay_ps: f64,
}

impl PhotonWavepacket {
    pub fn gaussian(center_wavelength_nm: f64, bandwidth_nm: f64) -> Self {
        Self { center_wavelength_nm, bandwidth_nm, shape: SpectralShape::Gaussian, delay_ps: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_nm > 0.0 && self.bandwidth_nm.is_finite()) {
            return Err(Error::InvalidInput(format!("bandwidth {} nm must be positive", self.bandwidth_nm)));
        }
        if !(self.center_wavelength_nm > 0.0 && self.center_wavelength_nm.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "centre wavelength {} nm must be positive",
                self.center_wavelength_nm
            )));
        }
        if !self.delay_ps.is_finite() {
            return Err(Error::InvalidInput("delay must be finite".into()));
        }
        Ok(())
    }

    /// Centre angular frequency in rad/ps.
    pub fn center_omega(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT_NM_PER_PS / self.center_wavelength_nm
    }

    /// Standard deviation of the spectral intensity in rad/ps, from the
    /// wavelength FWHM linearised about the centre.
    pub fn sigma_omega(&self) -> f64 {
        let fwhm = 2.0 * PI * SPEED_OF_LIGHT_NM_PER_PS * self.bandwidth_nm
            / (self.center_wavelength_nm * self.center_wavelength_nm);
        fwhm / GAUSSIAN_FWHM_PER_SIGMA
    }

    /// Spectral amplitude `phi(omega)`, normalised so that the integral of
    /// `|phi|^2` over omega (rad/ps) is one.
    pub fn amplitude(&self, omega: f64) -> f64 {
        let s = self.sigma_omega();
        let d = omega - self.center_omega();
        (2.0 * PI * s * s).powf(-0.25) * (-d * d / (4.0 * s * s)).exp()
    }
}

/// Signal and idler photons meeting at the splitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonState {
    pub signal: PhotonWavepacket,
    pub idler: PhotonWavepacket,
    /// Polarization and spatial mode overlap, in [0, 1].
    pub mode_overlap: f64,
}

impl TwoPhotonState {
    /// Identical Gaussian photons.
    pub fn degenerate(center_wavelength_nm: f64, bandwidth_nm: f64, mode_overlap: f64) -> Self {
        let p = PhotonWavepacket::gaussian(center_wavelength_nm, bandwidth_nm);
        Self { signal: p, idler: p, mode_overlap }
    }

    /// State whose single-pair dip on a balanced splitter has visibility
    /// `visibility`, i.e. `mode_overlap^2 = visibility`.
    pub fn with_source_visibility(self, visibility: f64) -> Self {
        Self { mode_overlap: visibility.clamp(0.0, 1.0).sqrt(), ..self }
    }

    pub fn validate(&self) -> Result<()> {
        self.signal.validate()?;
        self.idler.validate()?;
        if !(0.0..=1.0).contains(&self.mode_overlap) {
            return Err(Error::InvalidInput(format!("mode overlap {} outside [0, 1]", self.mode_overlap)));
        }
        Ok(())
    }

    /// Indistinguishability `M^2 |<phi_s| e^{-i omega tau} |phi_i>|^2` at scanned
    /// delay `tau_ps`, in closed form for Gaussian spectra.
    pub fn spectral_overlap(&self, tau_ps: f64) -> f64 {
        let (s1, s2) = (self.signal.sigma_omega(), self.idler.sigma_omega());
        let (w1, w2) = (self.signal.center_omega(), self.idler.center_omega());
        let tau = tau_ps + self.signal.delay_ps - self.idler.delay_ps;
        let v = s1 * s1 + s2 * s2;
        let prefactor = 2.0 * s1 * s2 / v;
        let detuning = (-(w1 - w2).powi(2) / (2.0 * v)).exp();
        let temporal = (-2.0 * s1 * s1 * s2 * s2 * tau * tau / v).exp();
        self.mode_overlap * self.mode_overlap * prefactor * detuning * temporal
    }

    /// Standard deviation in delay of the dip `exp(-tau^2 / (2 w^2))`.
    pub fn dip_width_ps(&self) -> f64 {
        let (s1, s2) = (self.signal.sigma_omega(), self.idler.sigma_omega());
        let v = s1 * s1 + s2 * s2;
        (v / (4.0 * s1 * s1 * s2 * s2)).sqrt()
    }
}
