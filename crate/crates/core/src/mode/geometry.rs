use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrystalCut {
    #[default]
    X,
}

/// Cross-section of an LNOI rib waveguide, or of a pair of identical ribs
/// when `gap_um` is set.
///
/// The LN film sits on a silica substrate. Ribs are trapezoids etched
/// `etch_depth_nm` into the film, leaving a slab of
/// `film_thickness_nm - etch_depth_nm` around them. A planar silica cladding
/// of `cladding_thickness_nm` covers the film top; anything above it is air.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveguideGeometry {
    pub film_thickness_nm: f64,
    pub etch_depth_nm: f64,
    pub top_width_um: f64,
    /// Angle between the sidewall and the substrate plane.
    pub sidewall_angle_deg: f64,
    pub cladding_thickness_nm: f64,
    /// Centre-to-centre rib separation of a coupler.
    pub gap_um: Option<f64>,
    pub crystal_cut: CrystalCut,
}

impl WaveguideGeometry {
    /// 600 nm X-cut film, 150 nm etch, 1 um top width, 60 degree sidewalls.
    pub fn lnoi_single() -> Self {
        Self {
            film_thickness_nm: 600.0,
            etch_depth_nm: 150.0,
            top_width_um: 1.0,
            sidewall_angle_deg: 60.0,
            cladding_thickness_nm: 1000.0,
            gap_um: None,
            crystal_cut: CrystalCut::X,
        }
    }

    /// [`Self::lnoi_single`] as a coupler with a 2.3 um centre-to-centre gap.
    pub fn lnoi_coupler() -> Self {
        Self::lnoi_single().with_gap(2.3)
    }

    pub fn with_gap(self, gap_um: f64) -> Self {
        Self { gap_um: Some(gap_um), ..self }
    }

    pub fn with_etch_depth(self, etch_depth_nm: f64) -> Self {
        Self { etch_depth_nm, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidGeometry(msg));
        let finite = [
            self.film_thickness_nm,
            self.etch_depth_nm,
            self.top_width_um,
            self.sidewall_angle_deg,
            self.cladding_thickness_nm,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite || self.gap_um.is_some_and(|g| !g.is_finite()) {
            return bad("non-finite parameter".into());
        }
        if self.film_thickness_nm <= 0.0 {
            return bad(format!("film thickness {} nm must be positive", self.film_thickness_nm));
        }
        if self.etch_depth_nm < 0.0 || self.etch_depth_nm > self.film_thickness_nm {
            return bad(format!(
                "etch depth {} nm must lie in [0, film thickness {} nm]",
                self.etch_depth_nm, self.film_thickness_nm
            ));
        }
        if self.top_width_um <= 0.0 {
            return bad(format!("top width {} um must be positive", self.top_width_um));
        }
        if !(self.sidewall_angle_deg > 0.0 && self.sidewall_angle_deg <= 90.0) {
            return bad(format!("sidewall angle {} deg must lie in (0, 90]", self.sidewall_angle_deg));
        }
        if self.cladding_thickness_nm < 0.0 {
            return bad(format!("cladding thickness {} nm must be non-negative", self.cladding_thickness_nm));
        }
        if let Some(gap) = self.gap_um {
            if gap <= self.top_width_um {
                return bad(format!(
                    "gap {gap} um must exceed the top width {} um (ribs would overlap)",
                    self.top_width_um
                ));
            }
        }
        Ok(())
    }

    pub fn slab_thickness_nm(&self) -> f64 {
        self.film_thickness_nm - self.etch_depth_nm
    }

    /// Horizontal run of one sidewall, in micrometres.
    pub fn sidewall_run_um(&self) -> f64 {
        let a = self.sidewall_angle_deg.to_radians();
        self.etch_depth_nm * 1e-3 * a.cos() / a.sin()
    }

    pub fn bottom_width_um(&self) -> f64 {
        self.top_width_um + 2.0 * self.sidewall_run_um()
    }

    /// Rib centre abscissae in micrometres, symmetric about zero.
    pub fn rib_centers_um(&self) -> Vec<f64> {
        match self.gap_um {
            Some(g) => vec![-0.5 * g, 0.5 * g],
            None => vec![0.0],
        }
    }
}

impl Default for WaveguideGeometry {
    fn default() -> Self {
        Self::lnoi_single()
    }
}
