use std::io::Write;

use super::geometry::WaveguideGeometry;
use crate::error::{Error, Result};
use crate::material::{Material, Polarization};

/// Material label of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Substrate,
    /// LN left in place around the ribs.
    Slab,
    Rib,
    Cladding,
    Air,
    /// Cells of hand-built maps.
    Custom,
}

impl Region {
    pub fn is_lithium_niobate(self) -> bool {
        matches!(self, Region::Slab | Region::Rib)
    }

    pub fn is_silica(self) -> bool {
        matches!(self, Region::Substrate | Region::Cladding)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossSectionOptions {
    pub polarization: Polarization,
    /// Distance from the outermost rib foot to the left and right walls.
    pub lateral_padding_um: f64,
    /// Distance below the film and above the film top.
    pub vertical_padding_um: f64,
}

impl Default for CrossSectionOptions {
    fn default() -> Self {
        Self { polarization: Polarization::TeLike, lateral_padding_um: 2.0, vertical_padding_um: 2.0 }
    }
}

pub const MIN_PADDING_UM: f64 = 2.0;
pub const MAX_GRID_PITCH_NM: f64 = 50.0;
pub const WAVELENGTH_RANGE_UM: (f64, f64) = (1.3, 1.7);
const MIN_ETCH_CELLS: f64 = 3.0;

/// Refractive index sampled at cell centres of a uniform rectangular grid.
///
/// Cells are stored column by column (`k = i * ny + j`, `i` along x). The
/// abscissae are symmetric about `x_mid_nm`, so a map built from a symmetric
/// geometry is exactly symmetric under [`IndexMap::mirrored`].
#[derive(Debug, Clone, PartialEq)]
pub struct IndexMap {
    nx: usize,
    ny: usize,
    dx_nm: f64,
    dy_nm: f64,
    x_mid_nm: f64,
    y_bottom_nm: f64,
    index: Vec<f64>,
    region: Vec<Region>,
}

impl IndexMap {
    pub fn new(nx: usize, ny: usize, dx_nm: f64, dy_nm: f64, index: Vec<f64>, region: Vec<Region>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidInput("index map must have at least one cell".into()));
        }
        if !(dx_nm > 0.0 && dy_nm > 0.0) {
            return Err(Error::InvalidInput("grid pitch must be positive".into()));
        }
        if index.len() != nx * ny || region.len() != nx * ny {
            return Err(Error::InvalidInput(format!(
                "expected {} cells, got {} indices and {} labels",
                nx * ny,
                index.len(),
                region.len()
            )));
        }
        if let Some(bad) = index.iter().find(|n| !(n.is_finite() && **n >= 1.0)) {
            return Err(Error::InvalidInput(format!("refractive index {bad} below 1")));
        }
        Ok(Self { nx, ny, dx_nm, dy_nm, x_mid_nm: 0.0, y_bottom_nm: 0.0, index, region })
    }

    /// Homogeneous medium.
    pub fn uniform(nx: usize, ny: usize, dx_nm: f64, dy_nm: f64, n: f64) -> Result<Self> {
        Self::new(nx, ny, dx_nm, dy_nm, vec![n; nx * ny], vec![Region::Custom; nx * ny])
    }

    /// Single-column map of horizontal layers listed bottom to top as
    /// `(thickness_nm, index)`. Each thickness must be a multiple of `dy_nm`.
    pub fn layered(dy_nm: f64, layers: &[(f64, f64)]) -> Result<Self> {
        let mut index = Vec::new();
        for &(t, n) in layers {
            let cells = t / dy_nm;
            if (cells - cells.round()).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!("layer thickness {t} nm is not a multiple of {dy_nm} nm")));
            }
            index.extend(std::iter::repeat(n).take(cells.round() as usize));
        }
        let len = index.len();
        Self::new(1, len, dy_nm, dy_nm, index, vec![Region::Custom; len])
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn dx_nm(&self) -> f64 {
        self.dx_nm
    }

    pub fn dy_nm(&self) -> f64 {
        self.dy_nm
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    pub fn index_at(&self, i: usize, j: usize) -> f64 {
        self.index[self.cell(i, j)]
    }

    pub fn region_at(&self, i: usize, j: usize) -> Region {
        self.region[self.cell(i, j)]
    }

    pub fn indices(&self) -> &[f64] {
        &self.index
    }

    pub fn regions(&self) -> &[Region] {
        &self.region
    }

    pub fn x_center_nm(&self, i: usize) -> f64 {
        self.x_mid_nm + ((2 * i + 1) as f64 - self.nx as f64) * 0.5 * self.dx_nm
    }

    pub fn y_center_nm(&self, j: usize) -> f64 {
        self.y_bottom_nm + (j as f64 + 0.5) * self.dy_nm
    }

    pub fn max_index(&self) -> f64 {
        self.index.iter().copied().fold(f64::MIN, f64::max)
    }

    pub fn min_index(&self) -> f64 {
        self.index.iter().copied().fold(f64::MAX, f64::min)
    }

    /// Index of the surrounding medium below the guiding layer: the value in
    /// the bottom row, maximised over the row.
    pub fn substrate_index(&self) -> f64 {
        (0..self.nx).map(|i| self.index_at(i, 0)).fold(f64::MIN, f64::max)
    }

    /// Reflection about the vertical line through `x_mid_nm`.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.nx {
            let src = self.nx - 1 - i;
            for j in 0..self.ny {
                out.index[self.cell(i, j)] = self.index[self.cell(src, j)];
                out.region[self.cell(i, j)] = self.region[self.cell(src, j)];
            }
        }
        out
    }

    /// One grid column as a single-column (x-invariant) map.
    pub fn column(&self, i: usize) -> Self {
        let range = self.cell(i, 0)..self.cell(i, 0) + self.ny;
        Self {
            nx: 1,
            ny: self.ny,
            dx_nm: self.dx_nm,
            dy_nm: self.dy_nm,
            x_mid_nm: self.x_center_nm(i),
            y_bottom_nm: self.y_bottom_nm,
            index: self.index[range.clone()].to_vec(),
            region: self.region[range].to_vec(),
        }
    }

    /// Writes `x_nm,y_nm,value` rows, one per cell, in storage order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_grid_csv(self, &self.index, writer)
    }
}

/// Dumps any per-cell quantity on `map`'s grid as `x_nm,y_nm,value`.
pub fn write_grid_csv<W: Write>(map: &IndexMap, values: &[f64], writer: W) -> Result<()> {
    if values.len() != map.len() {
        return Err(Error::InvalidInput("value count does not match grid".into()));
    }
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    w.write_record(["x_nm", "y_nm", "value"])?;
    for i in 0..map.nx {
        for j in 0..map.ny {
            w.write_record(&[
                map.x_center_nm(i).to_string(),
                map.y_center_nm(j).to_string(),
                values[map.cell(i, j)].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads `(x_nm, y_nm, value)` rows written by [`write_grid_csv`].
pub fn read_grid_csv<R: std::io::Read>(reader: R) -> Result<Vec<(f64, f64, f64)>> {
    let cols = crate::table::read_columns(reader, &["x_nm", "y_nm", "value"])?;
    Ok((0..cols[0].len()).map(|k| (cols[0][k], cols[1][k], cols[2][k])).collect())
}

/// Discretises `geometry` at `wavelength_um` with the default options.
pub fn build_cross_section(geometry: &WaveguideGeometry, wavelength_um: f64, grid_pitch_nm: f64) -> Result<IndexMap> {
    build_cross_section_with(geometry, wavelength_um, grid_pitch_nm, &CrossSectionOptions::default())
}

/// Vertical pitch: the largest value not above `pitch` for which the etch
/// step and the film top both fall on cell edges, or `pitch` itself when no
/// such value exists within a few cells.
fn aligned_vertical_pitch(geometry: &WaveguideGeometry, pitch: f64) -> f64 {
    let etch = geometry.etch_depth_nm;
    let film = geometry.film_thickness_nm;
    let on_grid = |len: f64, d: f64| {
        let c = len / d;
        (c - c.round()).abs() < 1e-6
    };
    if etch > 0.0 {
        let first = (etch / pitch - 1e-9).ceil().max(1.0) as usize;
        for k in first..first + 64 {
            let d = etch / k as f64;
            if on_grid(film, d) {
                return d;
            }
        }
    }
    pitch
}

pub fn build_cross_section_with(
    geometry: &WaveguideGeometry,
    wavelength_um: f64,
    grid_pitch_nm: f64,
    options: &CrossSectionOptions,
) -> Result<IndexMap> {
    geometry.validate()?;
    let (lo, hi) = WAVELENGTH_RANGE_UM;
    if !(lo..=hi).contains(&wavelength_um) {
        return Err(Error::InvalidInput(format!("wavelength {wavelength_um} um outside [{lo}, {hi}] um")));
    }
    if !(grid_pitch_nm > 0.0 && grid_pitch_nm <= MAX_GRID_PITCH_NM) {
        return Err(Error::Resolution(format!(
            "grid pitch {grid_pitch_nm} nm must lie in (0, {MAX_GRID_PITCH_NM}] nm"
        )));
    }
    if options.lateral_padding_um < MIN_PADDING_UM || options.vertical_padding_um < MIN_PADDING_UM {
        return Err(Error::InvalidInput(format!("padding must be at least {MIN_PADDING_UM} um on every side")));
    }

    let dx = grid_pitch_nm;
    let dy = aligned_vertical_pitch(geometry, grid_pitch_nm);
    let etch_cells = geometry.etch_depth_nm / dy;
    if etch_cells + 1e-9 < MIN_ETCH_CELLS {
        return Err(Error::Resolution(format!(
            "etch depth {} nm spans {etch_cells:.2} cells at {dy} nm pitch; at least {MIN_ETCH_CELLS} needed",
            geometry.etch_depth_nm
        )));
    }

    let centers_nm: Vec<f64> = geometry.rib_centers_um().iter().map(|c| c * 1e3).collect();
    let half_extent_nm = centers_nm.iter().fold(0.0f64, |m, c| m.max(c.abs()))
        + 0.5e3 * geometry.bottom_width_um()
        + options.lateral_padding_um * 1e3;
    let nx = (2.0 * half_extent_nm / dx - 1e-9).ceil() as usize;

    let pad_y = options.vertical_padding_um * 1e3;
    let below = (pad_y / dy - 1e-9).ceil() as usize;
    let film_cells = (geometry.film_thickness_nm / dy).round() as usize;
    let above_nm = pad_y.max(geometry.cladding_thickness_nm);
    let above = (above_nm / dy - 1e-9).ceil() as usize;
    let ny = below + film_cells + above;
    let y_bottom = -(below as f64) * dy;

    let pol = options.polarization;
    let n_ln = Material::LithiumNiobate.index(wavelength_um, pol);
    let n_sio2 = Material::Silica.index(wavelength_um, pol);
    let n_air = Material::Air.index(wavelength_um, pol);

    let film = geometry.film_thickness_nm;
    let slab_top = geometry.slab_thickness_nm();
    let cladding_top = film + geometry.cladding_thickness_nm;
    let half_top = 0.5e3 * geometry.top_width_um;
    let angle = geometry.sidewall_angle_deg.to_radians();
    let run_per_nm = angle.cos() / angle.sin();

    let mut map = IndexMap {
        nx,
        ny,
        dx_nm: dx,
        dy_nm: dy,
        x_mid_nm: 0.0,
        y_bottom_nm: y_bottom,
        index: vec![n_sio2; nx * ny],
        region: vec![Region::Substrate; nx * ny],
    };
    for i in 0..nx {
        let x = map.x_center_nm(i);
        for j in 0..ny {
            let y = map.y_center_nm(j);
            let region = if y < 0.0 {
                Region::Substrate
            } else if y < slab_top {
                Region::Slab
            } else if y < film {
                let half = half_top + (film - y) * run_per_nm;
                if centers_nm.iter().any(|c| (x - c).abs() <= half) {
                    Region::Rib
                } else {
                    Region::Cladding
                }
            } else if y < cladding_top {
                Region::Cladding
            } else {
                Region::Air
            };
            let k = map.cell(i, j);
            map.region[k] = region;
            map.index[k] = match region {
                Region::Slab | Region::Rib => n_ln,
                Region::Air => n_air,
                _ => n_sio2,
            };
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln_cells(map: &IndexMap) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..map.nx() {
            for j in 0..map.ny() {
                if map.region_at(i, j).is_lithium_niobate() {
                    out.push((i, j));
                }
            }
        }
        out
    }

    #[test]
    fn full_etch_leaves_one_isolated_trapezoid() {
        let g = WaveguideGeometry::lnoi_single().with_etch_depth(600.0);
        let map = build_cross_section(&g, 1.55, 20.0).unwrap();
        let cells = ln_cells(&map);
        assert!(!cells.is_empty());
        assert!(cells.iter().all(|&(i, j)| map.region_at(i, j) == Region::Rib));

        // Flood fill from the first LN cell reaches all of them.
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![cells[0]];
        while let Some((i, j)) = stack.pop() {
            if !seen.insert((i, j)) {
                continue;
            }
            let nbrs = [(i.wrapping_sub(1), j), (i + 1, j), (i, j.wrapping_sub(1)), (i, j + 1)];
            for (a, b) in nbrs {
                if a < map.nx() && b < map.ny() && map.region_at(a, b).is_lithium_niobate() {
                    stack.push((a, b));
                }
            }
        }
        assert_eq!(seen.len(), cells.len());

        // Every LN neighbour that is not LN is silica, and rows widen downwards.
        let mut prev_width = usize::MAX;
        for j in (0..map.ny()).rev() {
            let width = (0..map.nx()).filter(|&i| map.region_at(i, j) == Region::Rib).count();
            if width > 0 {
                assert!(prev_width == usize::MAX || width >= prev_width);
                prev_width = width;
            }
        }
        for &(i, j) in &cells {
            for (a, b) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
                let r = map.region_at(a, b);
                assert!(r.is_lithium_niobate() || r.is_silica(), "{r:?} next to LN");
            }
        }
    }

    #[test]
    fn coupler_ribs_are_gap_apart() {
        let g = WaveguideGeometry::lnoi_coupler();
        let map = build_cross_section(&g, 1.55, 20.0).unwrap();
        let (mut left, mut right) = ((0.0, 0usize), (0.0, 0usize));
        for i in 0..map.nx() {
            for j in 0..map.ny() {
                if map.region_at(i, j) == Region::Rib {
                    let x = map.x_center_nm(i);
                    let acc = if x < 0.0 { &mut left } else { &mut right };
                    acc.0 += x;
                    acc.1 += 1;
                }
            }
        }
        let sep = right.0 / right.1 as f64 - left.0 / left.1 as f64;
        assert!((sep - 2300.0).abs() <= map.dx_nm(), "separation {sep} nm");
    }

    #[test]
    fn coupler_map_is_mirror_symmetric() {
        let map = build_cross_section(&WaveguideGeometry::lnoi_coupler(), 1.55, 20.0).unwrap();
        assert_eq!(map.mirrored(), map);
        let odd = build_cross_section(&WaveguideGeometry::lnoi_coupler(), 1.55, 17.0).unwrap();
        assert_eq!(odd.mirrored(), odd);
    }

    #[test]
    fn layers_land_on_cell_edges() {
        let g = WaveguideGeometry::lnoi_single();
        let map = build_cross_section(&g, 1.55, 20.0).unwrap();
        assert!((map.dy_nm() - 18.75).abs() < 1e-12);
        let centre = map.nx() / 2;
        let slab_rows = (0..map.ny()).filter(|&j| map.region_at(0, j) == Region::Slab).count();
        let rib_rows = (0..map.ny()).filter(|&j| map.region_at(centre, j) == Region::Rib).count();
        assert_eq!(slab_rows, 24);
        assert_eq!(rib_rows, 8);
    }

    #[test]
    fn padding_is_honoured() {
        let g = WaveguideGeometry::lnoi_coupler();
        let map = build_cross_section(&g, 1.55, 20.0).unwrap();
        let left_foot = -1150.0 - 500.0 * g.bottom_width_um();
        assert!(map.x_center_nm(0) - 0.5 * map.dx_nm() <= left_foot - 2000.0 + 1e-9);
        assert!(map.y_center_nm(0) - 0.5 * map.dy_nm() <= -2000.0 + 1e-9);
        let top = map.y_center_nm(map.ny() - 1) + 0.5 * map.dy_nm();
        assert!(top >= 600.0 + 2000.0 - 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = WaveguideGeometry::lnoi_single();
        assert!(matches!(build_cross_section(&g, 1.55, 60.0), Err(Error::Resolution(_))));
        assert!(matches!(build_cross_section(&g, 1.0, 20.0), Err(Error::InvalidInput(_))));
        let shallow = g.with_etch_depth(40.0);
        assert!(matches!(build_cross_section(&shallow, 1.55, 20.0), Err(Error::Resolution(_))));
        assert!(matches!(build_cross_section(&g.with_gap(0.5), 1.55, 20.0), Err(Error::InvalidGeometry(_))));
    }

    #[test]
    fn csv_dump_has_header_and_all_cells() {
        let map = IndexMap::layered(10.0, &[(20.0, 1.44), (10.0, 2.1)]).unwrap();
        let mut buf = Vec::new();
        map.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "x_nm,y_nm,value");
        assert_eq!(lines.len(), 4);
        assert!(!text.contains('\r'));
    }
}
