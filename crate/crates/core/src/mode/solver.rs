use std::f64::consts::PI;

use faer::sparse::Triplet;
use rayon::prelude::*;

use super::eigen::{largest_eigenpairs, LanczosConfig, SymmetricOperator};
use super::geometry::WaveguideGeometry;
use super::index_map::{build_cross_section_with, CrossSectionOptions, IndexMap};
use crate::error::{Error, Result};

/// Default grid pitch for the mode solver.
pub const DEFAULT_GRID_PITCH_NM: f64 = 20.0;

/// Supermodes closer than this in effective index are treated as decoupled.
pub const DEGENERACY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Field vanishes just outside the grid.
    #[default]
    Dirichlet,
    /// Zero normal derivative at the grid edge.
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub boundary: Boundary,
    pub lanczos: LanczosConfig,
    /// Drop solutions that are not bound by the surrounding media.
    pub guided_only: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { boundary: Boundary::Dirichlet, lanczos: LanczosConfig::default(), guided_only: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Symmetric,
    Antisymmetric,
    None,
}

/// One eigenmode of the cross-section.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSolution {
    pub n_eff: f64,
    /// Dominant transverse field on the map's grid, in the map's storage
    /// order, normalised so that `sum(field^2) * dx * dy = 1` with the cell
    /// area in square micrometres.
    pub field: Vec<f64>,
    pub parity: Parity,
    /// Overlap of the field with its mirror image, in [-1, 1].
    pub mirror_overlap: f64,
    pub residual: f64,
}

impl ModeSolution {
    pub fn power(&self, map: &IndexMap) -> f64 {
        let area = map.dx_nm() * map.dy_nm() * 1e-6;
        self.field.iter().map(|e| e * e).sum::<f64>() * area
    }
}

/// Scalar Helmholtz operator `lap + k0^2 n^2` on the map's cell-centred grid,
/// in inverse square micrometres. A direction with a single cell is treated
/// as invariant.
struct Helmholtz<'a> {
    map: &'a IndexMap,
    k0_sq: f64,
    cx: f64,
    cy: f64,
    boundary: Boundary,
}

impl<'a> Helmholtz<'a> {
    fn new(map: &'a IndexMap, wavelength_um: f64, boundary: Boundary) -> Self {
        let k0 = 2.0 * PI / wavelength_um;
        let dx = map.dx_nm() * 1e-3;
        let dy = map.dy_nm() * 1e-3;
        Self {
            map,
            k0_sq: k0 * k0,
            cx: if map.nx() > 1 { 1.0 / (dx * dx) } else { 0.0 },
            cy: if map.ny() > 1 { 1.0 / (dy * dy) } else { 0.0 },
            boundary,
        }
    }

    fn diagonal(&self, i: usize, j: usize) -> f64 {
        let (nx, ny) = (self.map.nx(), self.map.ny());
        let n = self.map.index_at(i, j);
        let mut d = self.k0_sq * n * n;
        let dirichlet = self.boundary == Boundary::Dirichlet;
        if nx > 1 {
            let nbrs = (i > 0) as usize + (i + 1 < nx) as usize;
            d -= self.cx * if dirichlet { 2.0 } else { nbrs as f64 };
        }
        if ny > 1 {
            let nbrs = (j > 0) as usize + (j + 1 < ny) as usize;
            d -= self.cy * if dirichlet { 2.0 } else { nbrs as f64 };
        }
        d
    }

    /// Upper bound on the spectrum.
    fn spectral_bound(&self) -> f64 {
        let n = self.map.max_index();
        self.k0_sq * n * n
    }
}

impl SymmetricOperator for Helmholtz<'_> {
    fn dim(&self) -> usize {
        self.map.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (nx, ny) = (self.map.nx(), self.map.ny());
        for i in 0..nx {
            for j in 0..ny {
                let k = i * ny + j;
                let mut v = self.diagonal(i, j) * x[k];
                if self.cx > 0.0 {
                    if i > 0 {
                        v += self.cx * x[k - ny];
                    }
                    if i + 1 < nx {
                        v += self.cx * x[k + ny];
                    }
                }
                if self.cy > 0.0 {
                    if j > 0 {
                        v += self.cy * x[k - 1];
                    }
                    if j + 1 < ny {
                        v += self.cy * x[k + 1];
                    }
                }
                y[k] = v;
            }
        }
    }

    fn shifted_lower_triplets(&self, sigma: f64) -> Vec<Triplet<usize, usize, f64>> {
        let (nx, ny) = (self.map.nx(), self.map.ny());
        let mut t = Vec::with_capacity(3 * nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                let k = i * ny + j;
                t.push(Triplet::new(k, k, sigma - self.diagonal(i, j)));
                if self.cy > 0.0 && j + 1 < ny {
                    t.push(Triplet::new(k + 1, k, -self.cy));
                }
                if self.cx > 0.0 && i + 1 < nx {
                    t.push(Triplet::new(k + ny, k, -self.cx));
                }
            }
        }
        t
    }
}

fn mirror_overlap(map: &IndexMap, field: &[f64]) -> f64 {
    let (nx, ny) = (map.nx(), map.ny());
    let mut acc = 0.0;
    let mut norm = 0.0;
    for i in 0..nx {
        for j in 0..ny {
            let v = field[i * ny + j];
            acc += v * field[(nx - 1 - i) * ny + j];
            norm += v * v;
        }
    }
    acc / norm
}

/// Fixes the sign: positive left half, or a positive peak when the left half
/// integrates to zero.
fn fix_sign(map: &IndexMap, field: &mut [f64]) {
    let half = (map.nx() / 2).max(1) * map.ny();
    let left: f64 = field[..half.min(field.len())].iter().sum();
    let total: f64 = field.iter().map(|v| v.abs()).sum();
    let flip = if left.abs() > 1e-6 * total {
        left < 0.0
    } else {
        let peak = field.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        peak < 0.0
    };
    if flip {
        field.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Effective index below which a solution is not bound by the map's outer
/// media: the substrate and top rows, and the slab mode of the outermost
/// columns for two-dimensional maps.
pub fn guidance_cutoff(map: &IndexMap, wavelength_um: f64, config: &SolverConfig) -> Result<f64> {
    let (nx, ny) = (map.nx(), map.ny());
    let mut cutoff = map.substrate_index();
    cutoff = cutoff.max((0..nx).map(|i| map.index_at(i, ny - 1)).fold(f64::MIN, f64::max));
    if nx > 1 {
        let sub = SolverConfig { guided_only: false, ..*config };
        for i in [0, nx - 1] {
            let column = map.column(i);
            if column.max_index() > column.min_index() {
                let slab = solve_raw(&column, wavelength_um, 1, &sub)?;
                if let Some(m) = slab.first() {
                    cutoff = cutoff.max(m.n_eff);
                }
            }
        }
    }
    Ok(cutoff)
}

fn solve_raw(map: &IndexMap, wavelength_um: f64, n_modes: usize, config: &SolverConfig) -> Result<Vec<ModeSolution>> {
    let op = Helmholtz::new(map, wavelength_um, config.boundary);
    let k0_sq = op.k0_sq;
    // Slightly above k0^2 n_max^2, so sigma - A is positive definite even for
    // a homogeneous map with natural boundaries.
    let n_shift = map.max_index() + 1e-3;
    let sigma = (op.spectral_bound()).max(k0_sq * n_shift * n_shift);
    let pairs = largest_eigenpairs(&op, sigma, n_modes, &config.lanczos)?;
    let area = map.dx_nm() * map.dy_nm() * 1e-6;
    let mut out = Vec::with_capacity(pairs.values.len());
    for ((beta_sq, mut field), residual) in pairs.values.into_iter().zip(pairs.vectors).zip(pairs.residuals) {
        let n_eff = (beta_sq.max(0.0) / k0_sq).sqrt();
        let scale = 1.0 / (field.iter().map(|v| v * v).sum::<f64>() * area).sqrt();
        field.iter_mut().for_each(|v| *v *= scale);
        fix_sign(map, &mut field);
        let overlap = mirror_overlap(map, &field);
        let parity = if overlap > 0.99 {
            Parity::Symmetric
        } else if overlap < -0.99 {
            Parity::Antisymmetric
        } else {
            Parity::None
        };
        out.push(ModeSolution { n_eff, field, parity, mirror_overlap: overlap, residual });
    }
    Ok(out)
}

/// The `n_modes` solutions with the largest effective index, sorted
/// descending. With `guided_only`, unbound solutions are dropped, so fewer
/// may come back.
pub fn solve_modes_with(
    map: &IndexMap,
    wavelength_um: f64,
    n_modes: usize,
    config: &SolverConfig,
) -> Result<Vec<ModeSolution>> {
    if n_modes == 0 {
        return Err(Error::InvalidInput("n_modes must be at least 1".into()));
    }
    if !(wavelength_um > 0.0 && wavelength_um.is_finite()) {
        return Err(Error::InvalidInput(format!("wavelength {wavelength_um} um")));
    }
    let mut modes = solve_raw(map, wavelength_um, n_modes, config)?;
    if config.guided_only {
        let cutoff = guidance_cutoff(map, wavelength_um, config)?;
        modes.retain(|m| m.n_eff > cutoff);
    }
    Ok(modes)
}

pub fn solve_modes(map: &IndexMap, wavelength_um: f64, n_modes: usize) -> Result<Vec<ModeSolution>> {
    solve_modes_with(map, wavelength_um, n_modes, &SolverConfig::default())
}

/// Symmetric and antisymmetric fundamental supermodes of a coupler.
#[derive(Debug, Clone)]
pub struct SupermodePair {
    pub symmetric: ModeSolution,
    pub antisymmetric: ModeSolution,
    pub wavelength_um: f64,
}

impl SupermodePair {
    pub fn delta_n(&self) -> f64 {
        self.symmetric.n_eff - self.antisymmetric.n_eff
    }

    /// `lambda / (2 dn)` in micrometres.
    pub fn coupling_length_um(&self) -> Result<f64> {
        coupling_length_from_delta_n(self.wavelength_um, self.delta_n())
    }
}

pub fn coupling_length_from_delta_n(wavelength_um: f64, delta_n: f64) -> Result<f64> {
    if !(delta_n > DEGENERACY_TOLERANCE) {
        return Err(Error::InfiniteCouplingLength { delta_n });
    }
    Ok(wavelength_um / (2.0 * delta_n))
}

pub fn supermodes_with(
    geometry: &WaveguideGeometry,
    wavelength_um: f64,
    grid_pitch_nm: f64,
    options: &CrossSectionOptions,
    config: &SolverConfig,
) -> Result<SupermodePair> {
    if geometry.gap_um.is_none() {
        return Err(Error::InvalidGeometry("coupler geometry needs a gap".into()));
    }
    let map = build_cross_section_with(geometry, wavelength_um, grid_pitch_nm, options)?;
    let mut modes = solve_modes_with(&map, wavelength_um, 2, config)?;
    if modes.len() < 2 {
        return Err(Error::InvalidGeometry(format!("only {} guided supermode(s) at {wavelength_um} um", modes.len())));
    }
    let anti = modes.swap_remove(1);
    let sym = modes.swap_remove(0);
    match (sym.parity, anti.parity) {
        (Parity::Symmetric, Parity::Antisymmetric) => {}
        _ => {
            // Near-degenerate pairs come back as arbitrary mixtures.
            return Err(Error::InfiniteCouplingLength { delta_n: sym.n_eff - anti.n_eff });
        }
    }
    Ok(SupermodePair { symmetric: sym, antisymmetric: anti, wavelength_um })
}

/// Coupling length in micrometres at the default pitch and options.
pub fn supermode_coupling_length(geometry: &WaveguideGeometry, wavelength_um: f64) -> Result<f64> {
    supermodes_with(
        geometry,
        wavelength_um,
        DEFAULT_GRID_PITCH_NM,
        &CrossSectionOptions::default(),
        &SolverConfig::default(),
    )?
    .coupling_length_um()
}

/// Coupling length over several wavelengths, solved in parallel. Each entry
/// equals the corresponding sequential solve bit for bit.
pub fn coupling_length_sweep(
    geometry: &WaveguideGeometry,
    wavelengths_um: &[f64],
    grid_pitch_nm: f64,
    options: &CrossSectionOptions,
    config: &SolverConfig,
) -> Vec<Result<SupermodePair>> {
    wavelengths_um.par_iter().map(|&l| supermodes_with(geometry, l, grid_pitch_nm, options, config)).collect()
}

/// Writes a mode field on its map's grid as `x_nm,y_nm,value`.
pub fn write_mode_csv<W: std::io::Write>(map: &IndexMap, mode: &ModeSolution, writer: W) -> Result<()> {
    super::index_map::write_grid_csv(map, &mode.field, writer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{Material, Polarization};
    use crate::mode::build_cross_section;

    fn raw() -> SolverConfig {
        SolverConfig { guided_only: false, ..Default::default() }
    }

    /// Fundamental TE mode of a symmetric slab by bisection on
    /// `tan(kappa d / 2) = gamma / kappa`.
    fn slab_oracle(core: f64, clad: f64, thickness_um: f64, wavelength_um: f64) -> f64 {
        let k0 = 2.0 * PI / wavelength_um;
        let f = |n: f64| {
            let kappa = k0 * (core * core - n * n).sqrt();
            let gamma = k0 * (n * n - clad * clad).sqrt();
            (kappa * thickness_um / 2.0).tan() - gamma / kappa
        };
        // Restrict to the first branch of the tangent.
        let n_branch = (core * core - (PI / (k0 * thickness_um)).powi(2)).max(clad * clad).sqrt();
        let (mut lo, mut hi) = (n_branch + 1e-12, core - 1e-12);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn mirror_rms(map: &IndexMap, field: &[f64], sign: f64) -> f64 {
        let (nx, ny) = (map.nx(), map.ny());
        let mut acc = 0.0;
        for i in 0..nx {
            for j in 0..ny {
                let d = field[map.cell(i, j)] - sign * field[map.cell(nx - 1 - i, j)];
                acc += d * d;
            }
        }
        (acc / field.len() as f64).sqrt()
    }

    #[test]
    fn homogeneous_medium_with_natural_boundaries() {
        let map = IndexMap::uniform(24, 18, 20.0, 20.0, 2.0).unwrap();
        let cfg = SolverConfig { boundary: Boundary::Neumann, ..raw() };
        let modes = solve_modes_with(&map, 1.55, 1, &cfg).unwrap();
        assert!((modes[0].n_eff - 2.0).abs() < 1e-6);
    }

    #[test]
    fn slab_matches_dispersion_relation() {
        let lambda = 1.55;
        let core = Material::LithiumNiobate.index(lambda, Polarization::TeLike);
        let clad = Material::Silica.index(lambda, Polarization::TeLike);
        for thickness in [600.0, 400.0] {
            let map = IndexMap::layered(10.0, &[(3000.0, clad), (thickness, core), (3000.0, clad)]).unwrap();
            let modes = solve_modes_with(&map, lambda, 1, &raw()).unwrap();
            let oracle = slab_oracle(core, clad, thickness * 1e-3, lambda);
            assert!((modes[0].n_eff - oracle).abs() < 1e-3, "{} vs {oracle}", modes[0].n_eff);
        }
    }

    #[test]
    fn reference_rib_is_single_mode() {
        for pol in [Polarization::TeLike, Polarization::TmLike] {
            let opts = CrossSectionOptions { polarization: pol, ..Default::default() };
            let map = build_cross_section_with(&WaveguideGeometry::lnoi_single(), 1.55, 20.0, &opts).unwrap();
            let modes = solve_modes_with(&map, 1.55, 3, &SolverConfig::default()).unwrap();
            assert_eq!(modes.len(), 1, "{pol:?}");
            let m = &modes[0];
            assert!((m.power(&map) - 1.0).abs() < 1e-9);
            assert!(m.n_eff > map.substrate_index() && m.n_eff < map.max_index());
            assert_eq!(m.parity, Parity::Symmetric);
        }
    }

    #[test]
    fn halving_pitch_barely_moves_index() {
        let g = WaveguideGeometry::lnoi_single();
        let a = solve_modes(&build_cross_section(&g, 1.55, 20.0).unwrap(), 1.55, 1).unwrap();
        let b = solve_modes(&build_cross_section(&g, 1.55, 10.0).unwrap(), 1.55, 1).unwrap();
        assert!((a[0].n_eff - b[0].n_eff).abs() < 5e-4);
    }

    #[test]
    fn reference_coupler_supermodes() {
        let g = WaveguideGeometry::lnoi_coupler();
        let map = build_cross_section(&g, 1.55, 20.0).unwrap();
        let pair = supermodes_with(&g, 1.55, 20.0, &Default::default(), &Default::default()).unwrap();
        assert!(pair.symmetric.n_eff > pair.antisymmetric.n_eff);
        assert!(mirror_rms(&map, &pair.symmetric.field, 1.0) < 1e-6);
        assert!(mirror_rms(&map, &pair.antisymmetric.field, -1.0) < 1e-6);
        for m in [&pair.symmetric, &pair.antisymmetric] {
            assert!((m.power(&map) - 1.0).abs() < 1e-9);
        }
        let lc = pair.coupling_length_um().unwrap();
        assert!((90.0..=180.0).contains(&lc), "{lc}");
        let wide = supermode_coupling_length(&g.with_gap(3.5), 1.55).unwrap();
        assert!(wide > lc);
    }

    #[test]
    fn coupling_length_algebra() {
        assert!((coupling_length_from_delta_n(1.55, 1e-2).unwrap() - 77.5).abs() < 1e-9);
        assert!(matches!(coupling_length_from_delta_n(1.55, 0.0), Err(Error::InfiniteCouplingLength { .. })));
        assert!(supermode_coupling_length(&WaveguideGeometry::lnoi_single(), 1.55).is_err());
    }

    #[test]
    fn sweep_equals_sequential() {
        let g = WaveguideGeometry::lnoi_coupler().with_gap(2.0);
        let wl = [1.53, 1.57];
        let opts = CrossSectionOptions::default();
        let cfg = SolverConfig::default();
        let par = coupling_length_sweep(&g, &wl, 25.0, &opts, &cfg);
        for (l, p) in wl.iter().zip(par) {
            let p = p.unwrap();
            let s = supermodes_with(&g, *l, 25.0, &opts, &cfg).unwrap();
            assert_eq!(p.symmetric.n_eff.to_bits(), s.symmetric.n_eff.to_bits());
            assert_eq!(p.antisymmetric.field, s.antisymmetric.field);
        }
    }

    #[test]
    fn mode_csv_has_header() {
        let map = IndexMap::uniform(3, 3, 20.0, 20.0, 2.0).unwrap();
        let cfg = SolverConfig { boundary: Boundary::Neumann, ..raw() };
        let m = solve_modes_with(&map, 1.55, 1, &cfg).unwrap();
        let mut buf = Vec::new();
        write_mode_csv(&map, &m[0], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x_nm,y_nm,value\n"));
        assert_eq!(text.lines().count(), 10);
    }
}
