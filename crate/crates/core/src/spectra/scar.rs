//! Scar scores: mean density in a tube around the B orbits relative to the
//! mean density over the classically allowed region.

use std::collections::HashMap;

use serde::Serialize;

use super::density::{for_each_quadrature_point, unfold_density, DensityField};
use super::domain::DiscretizedDomain;
use super::eigensolver::EigenPair;
use super::IrrepLabel;
use crate::dynamics::IntegratorOptions;
use crate::error::{Error, Result};
use crate::hamiltonians::SymmetryOp;
use crate::orbits::{orbit_path, OrbitRecord};

/// Points within `radius` of a set of closed polylines. Segments are binned
/// on a square grid of cell size `radius`.
#[derive(Debug, Clone)]
pub struct ScarTube {
    pub radius: f64,
    segments: Vec<[[f64; 2]; 2]>,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl ScarTube {
    pub fn new(polylines: &[Vec<[f64; 2]>], radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("tube radius must be positive, got {radius}")));
        }
        let mut segments = Vec::new();
        for line in polylines {
            for w in line.windows(2) {
                segments.push([w[0], w[1]]);
            }
        }
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (k, [a, b]) in segments.iter().enumerate() {
            let lo = |i: usize| ((a[i].min(b[i]) - radius) / radius).floor() as i64;
            let hi = |i: usize| ((a[i].max(b[i]) + radius) / radius).floor() as i64;
            for cx in lo(0)..=hi(0) {
                for cy in lo(1)..=hi(1) {
                    cells.entry((cx, cy)).or_default().push(k);
                }
            }
        }
        Ok(Self { radius, segments, cells })
    }

    /// Tube around a B orbit and its two rotated images, from one period
    /// sampled at `samples` points.
    pub fn around_orbit(record: &OrbitRecord, radius: f64, samples: usize, opts: &IntegratorOptions) -> Result<Self> {
        let path = orbit_path(record, samples, opts)?;
        let base: Vec<[f64; 2]> = path.states.iter().map(|s| [s.x, s.y]).collect();
        let lines: Vec<Vec<[f64; 2]>> = (0..3u8)
            .map(|k| {
                let g = SymmetryOp {
                    rotation: k,
                    reflect: false,
                };
                base.iter().map(|&p| g.apply(p)).collect()
            })
            .collect();
        Self::new(&lines, radius)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let key = ((p[0] / self.radius).floor() as i64, (p[1] / self.radius).floor() as i64);
        let Some(list) = self.cells.get(&key) else {
            return false;
        };
        let r2 = self.radius * self.radius;
        list.iter().any(|&k| segment_distance2(p, self.segments[k]) <= r2)
    }
}

fn segment_distance2(p: [f64; 2], [a, b]: [[f64; 2]; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (dx, dy) = (a[0] + t * d[0] - p[0], a[1] + t * d[1] - p[1]);
    dx * dx + dy * dy
}

#[derive(Debug, Clone, Serialize)]
pub struct ScarScore {
    pub energy: f64,
    pub index: usize,
    pub irrep: IrrepLabel,
    pub tube_radius: f64,
    pub score: f64,
}

/// Quadrature weights, potential values and tube membership of one domain,
/// computed once and shared by all states scored on it.
pub struct ScarScorer<'a> {
    domain: &'a DiscretizedDomain,
    radius: f64,
    weights: Vec<f64>,
    potential: Vec<f64>,
    in_tube: Vec<bool>,
}

impl<'a> ScarScorer<'a> {
    pub fn new(domain: &'a DiscretizedDomain, tube: &ScarTube) -> Self {
        let (mut weights, mut potential, mut in_tube) = (Vec::new(), Vec::new(), Vec::new());
        for_each_quadrature_point(domain, |x, y, w, _, _| {
            weights.push(w);
            potential.push(domain.model.value(x, y).unwrap_or(f64::INFINITY));
            in_tube.push(tube.contains([x, y]));
        });
        Self {
            domain,
            radius: tube.radius,
            weights,
            potential,
            in_tube,
        }
    }

    /// The tube and the allowed region `{v <= energy}` are both C3v
    /// invariant, so the ratio of means is computed on the reduced domain.
    pub fn score(&self, pair: &EigenPair) -> ScarScore {
        let density = unfold_density(self.domain, pair);
        let (mut tube_mass, mut tube_area, mut mass, mut area) = (0.0, 0.0, 0.0, 0.0);
        let mut q = 0;
        density.for_each_sample(|_, _, _, rho| {
            if self.potential[q] <= pair.energy {
                let w = self.weights[q];
                mass += w * rho;
                area += w;
                if self.in_tube[q] {
                    tube_mass += w * rho;
                    tube_area += w;
                }
            }
            q += 1;
        });
        let score = if tube_area > 0.0 && mass > 0.0 {
            (tube_mass / tube_area) / (mass / area)
        } else {
            log::warn!("tube of radius {} misses the allowed region at energy {}", self.radius, pair.energy);
            0.0
        };
        ScarScore {
            energy: pair.energy,
            index: pair.index,
            irrep: pair.irrep,
            tube_radius: self.radius,
            score,
        }
    }
}

/// Scar score of the state behind `density`.
pub fn scar_score(density: &DensityField<'_>, tube: &ScarTube) -> ScarScore {
    ScarScorer::new(density.domain(), tube).score(density.pair())
}
