//! Refractive-index dispersion of the materials in an LNOI stack.
//!
//! All formulas take the vacuum wavelength in micrometres.

/// Three-term Sellmeier model `n^2 = 1 + sum B_i l^2 / (l^2 - C_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sellmeier {
    pub b: [f64; 3],
    pub c: [f64; 3],
}

impl Sellmeier {
    pub fn index(&self, wavelength_um: f64) -> f64 {
        let l2 = wavelength_um * wavelength_um;
        let eps = 1.0 + self.b.iter().zip(&self.c).map(|(b, c)| b * l2 / (l2 - c)).sum::<f64>();
        eps.sqrt()
    }
}

/// Congruent lithium niobate, extraordinary ray (Zelmon, Small & Jundt,
/// JOSA B 14, 3319 (1997)).
pub const LN_EXTRAORDINARY: Sellmeier = Sellmeier { b: [2.9804, 0.5981, 8.9543], c: [0.02047, 0.0666, 416.08] };

/// Congruent lithium niobate, ordinary ray (same source).
pub const LN_ORDINARY: Sellmeier = Sellmeier { b: [2.6734, 1.2290, 12.614], c: [0.01764, 0.05914, 474.6] };

/// Fused silica (Malitson, JOSA 55, 1205 (1965)).
pub const FUSED_SILICA: Sellmeier = Sellmeier {
    b: [0.6961663, 0.4079426, 0.8974794],
    c: [0.0684043 * 0.0684043, 0.1162414 * 0.1162414, 9.896161 * 9.896161],
};

/// Polarization family of a guided mode.
///
/// In X-cut LNOI the optic axis lies in the film plane, so a TE-like mode
/// (field mostly in-plane, along z) sees the extraordinary index and a TM-like
/// mode sees the ordinary index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Polarization {
    #[default]
    TeLike,
    TmLike,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Material {
    LithiumNiobate,
    Silica,
    Air,
}

impl Material {
    pub fn index(self, wavelength_um: f64, polarization: Polarization) -> f64 {
        match self {
            Material::LithiumNiobate => match polarization {
                Polarization::TeLike => LN_EXTRAORDINARY.index(wavelength_um),
                Polarization::TmLike => LN_ORDINARY.index(wavelength_um),
            },
            Material::Silica => FUSED_SILICA.index(wavelength_um),
            Material::Air => 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn telecom_values() {
        // Tabulated values at 1550 nm.
        assert!((LN_EXTRAORDINARY.index(1.55) - 2.1375).abs() < 5e-4);
        assert!((LN_ORDINARY.index(1.55) - 2.2111).abs() < 5e-4);
        assert!((FUSED_SILICA.index(1.55) - 1.4440).abs() < 5e-4);
    }

    #[test]
    fn ln_above_silica_across_band() {
        for i in 0..=40 {
            let l = 1.3 + 0.01 * i as f64;
            let sio2 = FUSED_SILICA.index(l);
            assert!(LN_EXTRAORDINARY.index(l) > sio2);
            assert!(LN_ORDINARY.index(l) > sio2);
        }
    }

    #[test]
    fn normal_dispersion() {
        assert!(LN_EXTRAORDINARY.index(1.3) > LN_EXTRAORDINARY.index(1.7));
        assert!(FUSED_SILICA.index(1.3) > FUSED_SILICA.index(1.7));
    }
}
