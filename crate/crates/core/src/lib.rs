//! Simulation and analysis of Hong-Ou-Mandel interference in integrated
//! lithium-niobate-on-insulator directional couplers.
//!
//! * [`mode`] solves rib-waveguide and coupler supermodes on a cross-section
//!   grid.
//! * [`coupler`] is the lumped coupled-mode model of the directional coupler.
//! * [`hom`] computes two-photon interference, multi-pair corrections and
//!   Monte Carlo coincidence counts.
//! * [`fit`] holds the least-squares fits and loss extraction used on
//!   measured data.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupler;
pub mod error;
pub mod fit;
pub mod hom;
pub mod material;
pub mod mode;
pub mod table;

pub use error::{Error, Result};
