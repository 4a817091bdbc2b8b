//! Finite-difference modes of LNOI rib waveguides and couplers.

mod eigen;
mod geometry;
mod index_map;
mod solver;

pub use eigen::{largest_eigenpairs, EigenPairs, LanczosConfig, SymmetricOperator};
pub use geometry::{CrystalCut, WaveguideGeometry};
pub use index_map::{
    build_cross_section, build_cross_section_with, read_grid_csv, write_grid_csv, CrossSectionOptions, IndexMap,
    Region, MAX_GRID_PITCH_NM, MIN_PADDING_UM, WAVELENGTH_RANGE_UM,
};
pub use solver::{
    coupling_length_from_delta_n, coupling_length_sweep, guidance_cutoff, solve_modes, solve_modes_with,
    supermode_coupling_length, supermodes_with, write_mode_csv, Boundary, ModeSolution, Parity, SolverConfig,
    SupermodePair, DEFAULT_GRID_PITCH_NM, DEGENERACY_TOLERANCE,
};
