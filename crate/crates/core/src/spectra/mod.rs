//! Symmetry-resolved quantum spectra on the reduced domain.
//!
//! Each irrep of C3v is a separate eigenproblem on the sixth of the
//! configuration triangle between the mirror lines `OL` and `OB`, truncated
//! by a cut in the classically forbidden region. A1 and A2 differ only in
//! their mirror boundary conditions; E is written as
//! `psi = (x - i y)(u1 + i u2)` and solved as a coupled real system.

mod basis;
mod density;
mod domain;
mod eigensolver;
mod mesh;
pub mod quadrature;
mod scar;
mod sparse;
mod weyl;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use density::{unfold_density, DensityField, DensityRaster};
pub use domain::{
    build_domain, build_domain_with_cut, default_cut_level, lowest_turning_point, minimal_wavelength, truncated_triangle,
    DiscretizedDomain, DomainOptions, MIN_RESOLUTION,
};
pub use eigensolver::{count_below, lowest_eigenpairs, solve_eigenpairs, solve_eigenpairs_with, EigenPair, SolverOptions};
pub use mesh::{Edge, TriangleMesh};
pub use scar::{scar_score, ScarScore, ScarScorer, ScarTube};
pub use weyl::{allowed_area, weyl_count, weyl_density, weyl_total};

/// Irreducible representations of C3v.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IrrepLabel {
    A1,
    A2,
    E,
}

impl IrrepLabel {
    pub const ALL: [IrrepLabel; 3] = [IrrepLabel::A1, IrrepLabel::A2, IrrepLabel::E];

    pub fn degeneracy(self) -> usize {
        match self {
            IrrepLabel::A1 | IrrepLabel::A2 => 1,
            IrrepLabel::E => 2,
        }
    }

    /// Residues of the angular quantum number `n` modulo 3 carried by the
    /// irrep.
    pub fn angular_class(self) -> &'static [i64] {
        match self {
            IrrepLabel::A1 | IrrepLabel::A2 => &[0],
            IrrepLabel::E => &[1, 2],
        }
    }

    /// Share `d^2 / |G|` of all states, counting degeneracy.
    pub fn weyl_fraction(self) -> f64 {
        let d = self.degeneracy() as f64;
        d * d / 6.0
    }

    /// Characters of the rotation `R` and of a reflection.
    pub fn characters(self) -> (f64, f64) {
        match self {
            IrrepLabel::A1 => (1.0, 1.0),
            IrrepLabel::A2 => (1.0, -1.0),
            IrrepLabel::E => (-1.0, 0.0),
        }
    }
}

impl fmt::Display for IrrepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IrrepLabel::A1 => "A1",
            IrrepLabel::A2 => "A2",
            IrrepLabel::E => "E",
        })
    }
}

impl FromStr for IrrepLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_uppercase().as_str() {
            "A1" => Ok(IrrepLabel::A1),
            "A2" => Ok(IrrepLabel::A2),
            "E" => Ok(IrrepLabel::E),
            _ => Err(Error::InvalidParameter(format!("unknown irrep '{s}' (expected A1, A2 or E)"))),
        }
    }
}

/// Writes an eigenpair as CSV `x,y,psi` (A1, A2) or `x,y,u1,u2` (E) over the
/// mesh nodes, preceded by `#` header lines.
pub fn write_eigenpair_csv<W: Write>(w: &mut W, domain: &DiscretizedDomain, pair: &EigenPair) -> std::io::Result<()> {
    writeln!(w, "# model={} irrep={} eta={} energy={:.15e} index={}", domain.model, pair.irrep, domain.eta, pair.energy, pair.index)?;
    writeln!(w, "# mesh: {} cut_level={}", domain.describe_mesh(), domain.cut_level)?;
    writeln!(w, "# reduced_norm={} residual={:.3e}", pair.reduced_norm, pair.residual)?;
    match pair.fields.len() {
        1 => writeln!(w, "x,y,psi")?,
        _ => writeln!(w, "x,y,u1,u2")?,
    }
    for (k, p) in domain.mesh.positions().iter().enumerate() {
        write!(w, "{:.10e},{:.10e}", p[0], p[1])?;
        for f in &pair.fields {
            write!(w, ",{:.10e}", f[k])?;
        }
        writeln!(w)?;
    }
    Ok(())
}
