//! Classical periodic orbits, symmetry-resolved quantum spectra and scar
//! analysis for two C3v-symmetric planar Hamiltonians: three particles with
//! repulsive `1/d^6` interactions on a ring (after removing the centre of
//! mass), and the Henon-Heiles potential.

pub mod dynamics;
pub mod error;
pub mod hamiltonians;
pub mod orbits;
pub mod semiclassics;
pub mod spectra;

pub use error::{Error, Result};
pub use hamiltonians::{PhaseState, PotentialModel, ScaledUnits};
