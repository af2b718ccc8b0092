//! The two C3v-symmetric model potentials, phase-space points, the reduction
//! from three ring angles to Jacobi coordinates, and the symmetry group.
//!
//! Everything is expressed in scaled units. For the ring model energies are
//! measured in `C6/R^6`, momenta in `(m C6 / R^4)^{1/2}` and times in
//! `(m R^8 / C6)^{1/2}`; the planar Hamiltonian is then
//! `(px^2 + py^2)/4 + v(x, y)`. For the Henon-Heiles model the usual
//! dimensionless form `(px^2 + py^2)/2 + (x^2 + y^2)/2 + x^2 y - y^3/3` is used.

use std::f64::consts::{FRAC_PI_3, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Unit normals `c_i` of the three ring walls: the sine arguments of the ring
/// potential are `pi/3 + c_i . r`.
const WALL_NORMALS: [[f64; 2]; 3] = [[0.0, 1.0], [SQRT3 / 2.0, -0.5], [-SQRT3 / 2.0, -0.5]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PotentialModel {
    #[serde(rename = "ring")]
    Ring,
    #[serde(rename = "hh")]
    HenonHeiles,
}

impl fmt::Display for PotentialModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PotentialModel::Ring => "ring",
            PotentialModel::HenonHeiles => "hh",
        })
    }
}

impl FromStr for PotentialModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ring" => Ok(PotentialModel::Ring),
            "hh" | "henon-heiles" | "henon_heiles" => Ok(PotentialModel::HenonHeiles),
            other => Err(Error::InvalidParameter(format!("unknown model '{other}'"))),
        }
    }
}

/// Value, gradient and Hessian of the scaled potential at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSample {
    pub value: f64,
    pub gradient: [f64; 2],
    /// Row-major symmetric matrix.
    pub hessian: [[f64; 2]; 2],
}

impl PotentialModel {
    /// Prefactor `c` of the kinetic term `c (px^2 + py^2)`.
    pub fn kinetic_prefactor(self) -> f64 {
        match self {
            PotentialModel::Ring => 0.25,
            PotentialModel::HenonHeiles => 0.5,
        }
    }

    /// Energy above which trajectories are no longer bound (Henon-Heiles
    /// saddle height). The ring potential confines at every energy.
    pub fn escape_energy(self) -> f64 {
        match self {
            PotentialModel::Ring => f64::INFINITY,
            PotentialModel::HenonHeiles => 1.0 / 6.0,
        }
    }

    /// Whether `(x, y)` lies strictly inside the configuration domain. For
    /// the ring this is the open triangle ABC, i.e. all three sine factors
    /// positive.
    pub fn contains(self, x: f64, y: f64) -> bool {
        match self {
            PotentialModel::Ring => WALL_NORMALS.iter().all(|c| {
                let a = FRAC_PI_3 + c[0] * x + c[1] * y;
                a > 0.0 && a.sin() > 0.0
            }),
            PotentialModel::HenonHeiles => x.is_finite() && y.is_finite(),
        }
    }

    /// Potential value; `None` outside the ring triangle.
    #[inline]
    pub fn value(self, x: f64, y: f64) -> Option<f64> {
        match self {
            PotentialModel::Ring => {
                let mut v = -1.0 / 9.0;
                for c in &WALL_NORMALS {
                    let a = FRAC_PI_3 + c[0] * x + c[1] * y;
                    let s = a.sin();
                    if a <= 0.0 || s <= 0.0 {
                        return None;
                    }
                    v += s.powi(-6) / 64.0;
                }
                Some(v)
            }
            PotentialModel::HenonHeiles => {
                Some(0.5 * (x * x + y * y) + x * x * y - y * y * y / 3.0)
            }
        }
    }

    /// Gradient; `None` outside the ring triangle.
    #[inline]
    pub fn gradient(self, x: f64, y: f64) -> Option<[f64; 2]> {
        match self {
            PotentialModel::Ring => {
                let mut g = [0.0; 2];
                for c in &WALL_NORMALS {
                    let a = FRAC_PI_3 + c[0] * x + c[1] * y;
                    let (s, co) = a.sin_cos();
                    if a <= 0.0 || s <= 0.0 {
                        return None;
                    }
                    let d1 = -6.0 * co * s.powi(-7) / 64.0;
                    g[0] += d1 * c[0];
                    g[1] += d1 * c[1];
                }
                Some(g)
            }
            PotentialModel::HenonHeiles => Some([x + 2.0 * x * y, y + x * x - y * y]),
        }
    }

    /// Gradient and Hessian; `None` outside the ring triangle.
    #[inline]
    pub fn gradient_hessian(self, x: f64, y: f64) -> Option<([f64; 2], [[f64; 2]; 2])> {
        match self {
            PotentialModel::Ring => {
                let mut g = [0.0; 2];
                let mut h = [[0.0; 2]; 2];
                for c in &WALL_NORMALS {
                    let a = FRAC_PI_3 + c[0] * x + c[1] * y;
                    let (s, co) = a.sin_cos();
                    if a <= 0.0 || s <= 0.0 {
                        return None;
                    }
                    let inv = 1.0 / s;
                    let inv6 = inv.powi(6);
                    let d1 = -6.0 * co * inv6 * inv / 64.0;
                    let d2 = (6.0 * inv6 + 42.0 * co * co * inv6 * inv * inv) / 64.0;
                    g[0] += d1 * c[0];
                    g[1] += d1 * c[1];
                    h[0][0] += d2 * c[0] * c[0];
                    h[0][1] += d2 * c[0] * c[1];
                    h[1][1] += d2 * c[1] * c[1];
                }
                h[1][0] = h[0][1];
                Some((g, h))
            }
            PotentialModel::HenonHeiles => Some((
                [x + 2.0 * x * y, y + x * x - y * y],
                [[1.0 + 2.0 * y, 2.0 * x], [2.0 * x, 1.0 - 2.0 * y]],
            )),
        }
    }

    /// Value, gradient and Hessian at `(x, y)`.
    pub fn sample(self, x: f64, y: f64) -> Result<PotentialSample> {
        let value = self.value(x, y).ok_or(Error::Domain { x, y })?;
        let (gradient, hessian) = self.gradient_hessian(x, y).ok_or(Error::Domain { x, y })?;
        Ok(PotentialSample {
            value,
            gradient,
            hessian,
        })
    }

    /// Curvature of the isotropic minimum at the origin.
    pub fn origin_curvature(self) -> f64 {
        match self {
            // three walls, each with second derivative 20/27 at pi/3, summed
            // over the unit normals (sum c c^T = 3/2 I)
            PotentialModel::Ring => 10.0 / 9.0,
            PotentialModel::HenonHeiles => 1.0,
        }
    }

    /// Small-oscillation angular frequency about the origin.
    pub fn origin_frequency(self) -> f64 {
        (2.0 * self.kinetic_prefactor() * self.origin_curvature()).sqrt()
    }

    /// Total planar energy of a phase-space point; `None` outside the domain.
    pub fn energy(self, s: &PhaseState) -> Option<f64> {
        self.value(s.x, s.y)
            .map(|v| self.kinetic_prefactor() * (s.px * s.px + s.py * s.py) + v)
    }

    /// Characteristic configuration-space geometry used by the reduced
    /// quantum domain: distance from the origin to the midpoint L of the
    /// bottom edge, and to the vertex B (the Henon-Heiles saddle).
    pub fn reference_triangle(self) -> (f64, f64) {
        match self {
            PotentialModel::Ring => (FRAC_PI_3, 2.0 * FRAC_PI_3),
            PotentialModel::HenonHeiles => (0.5, 1.0),
        }
    }
}

/// Scaled-unit bookkeeping: the model and its dimensionless Planck constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledUnits {
    pub model: PotentialModel,
    pub eta: f64,
}

impl ScaledUnits {
    pub fn new(model: PotentialModel, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
        }
        Ok(Self { model, eta })
    }

    /// Human-readable unit names for file headers.
    pub fn describe(&self) -> String {
        match self.model {
            PotentialModel::Ring => format!(
                "model=ring eta={} energy=C6/R^6 momentum=(m*C6/R^4)^(1/2) time=(m*R^8/C6)^(1/2)",
                self.eta
            ),
            PotentialModel::HenonHeiles => format!(
                "model=hh eta={} energy=E_HH momentum=P_HH length=L_HH time=1/omega0",
                self.eta
            ),
        }
    }
}

/// Rotational energy of the free centre-of-mass angle for total angular
/// momentum `n * hbar`, in units of `C6/R^6`.
pub fn centrifugal_offset(n: i64, units: &ScaledUnits) -> Result<f64> {
    if units.model != PotentialModel::Ring {
        return Err(Error::InvalidParameter(
            "the centrifugal offset is defined for the ring model only".into(),
        ));
    }
    let l = units.eta * n as f64;
    Ok(l * l / 3.0)
}

/// A point of the planar phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseState {
    pub x: f64,
    pub y: f64,
    pub px: f64,
    pub py: f64,
}

impl PhaseState {
    pub fn new(x: f64, y: f64, px: f64, py: f64) -> Self {
        Self { x, y, px, py }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.px, self.py]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn distance(&self, other: &PhaseState) -> f64 {
        let a = self.to_array();
        let b = other.to_array();
        a.iter().zip(&b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
    }

    /// Same position, reversed momenta.
    pub fn time_reversed(self) -> Self {
        Self::new(self.x, self.y, -self.px, -self.py)
    }

    pub fn transformed(self, g: SymmetryOp) -> Self {
        let [x, y] = g.apply([self.x, self.y]);
        let [px, py] = g.apply([self.px, self.py]);
        Self::new(x, y, px, py)
    }
}

/// The three ring angles and their conjugate angular momenta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingConfiguration {
    pub theta: [f64; 3],
    pub ell: [f64; 3],
}

/// Jacobi coordinates `(x, y, z)` and conjugate momenta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiState {
    pub plane: PhaseState,
    pub z: f64,
    pub pz: f64,
}

// Rows of the linear part of the map theta -> (x, y, z). The rows are
// mutually orthogonal with squared norms 1/2, 1/2, 1/3.
const JACOBI_ROWS: [[f64; 3]; 3] = [
    [0.5 / SQRT3, 0.5 / SQRT3, -1.0 / SQRT3],
    [-0.5, 0.5, 0.0],
    [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
];
const JACOBI_OFFSET: [f64; 3] = [PI / SQRT3, -FRAC_PI_3, -2.0 * FRAC_PI_3];
const JACOBI_ROW_NORM2: [f64; 3] = [0.5, 0.5, 1.0 / 3.0];

impl RingConfiguration {
    pub fn is_ordered(&self) -> bool {
        let [t1, t2, t3] = self.theta;
        t1 < t2 && t2 < t3 && t3 < t1 + 2.0 * PI
    }

    /// Jacobi reduction. The momenta transform with the inverse transpose of
    /// the coordinate map, so that `pz = l1 + l2 + l3`.
    pub fn to_jacobi(&self) -> Result<JacobiState> {
        if !self.is_ordered() {
            return Err(Error::Ordering(self.theta));
        }
        let mut q = [0.0; 3];
        let mut p = [0.0; 3];
        for k in 0..3 {
            let row = &JACOBI_ROWS[k];
            q[k] = dot3(row, &self.theta) + JACOBI_OFFSET[k];
            p[k] = dot3(row, &self.ell) / JACOBI_ROW_NORM2[k];
        }
        Ok(JacobiState {
            plane: PhaseState::new(q[0], q[1], p[0], p[1]),
            z: q[2],
            pz: p[2],
        })
    }

    pub fn from_jacobi(j: &JacobiState) -> Result<Self> {
        let q = [j.plane.x, j.plane.y, j.z];
        let p = [j.plane.px, j.plane.py, j.pz];
        let mut theta = [0.0; 3];
        let mut ell = [0.0; 3];
        // A^{-1} = A^T diag(1/|row|^2), and l = A^T p.
        for i in 0..3 {
            for k in 0..3 {
                theta[i] += JACOBI_ROWS[k][i] * (q[k] - JACOBI_OFFSET[k]) / JACOBI_ROW_NORM2[k];
                ell[i] += JACOBI_ROWS[k][i] * p[k];
            }
        }
        let cfg = Self { theta, ell };
        if !cfg.is_ordered() {
            return Err(Error::Ordering(theta));
        }
        Ok(cfg)
    }

    /// Ring kinetic energy `sum l_i^2 / 2` in scaled units.
    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.ell.iter().map(|l| l * l).sum::<f64>()
    }

    /// Pair interaction energy `sum 1/d_ij^6 - 1/9` (chord distances on the
    /// unit circle), measured from the equilateral minimum.
    pub fn interaction_energy(&self) -> f64 {
        let [t1, t2, t3] = self.theta;
        let pair = |a: f64, b: f64| {
            let d = 2.0 * ((a - b) / 2.0).sin().abs();
            d.powi(-6)
        };
        pair(t1, t2) + pair(t2, t3) + pair(t3, t1) - 1.0 / 9.0
    }
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// An element of C3v acting on the plane: `R^rotation` after an optional
/// reflection `x -> -x` (the mirror line through C and L).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SymmetryOp {
    pub rotation: u8,
    pub reflect: bool,
}

impl SymmetryOp {
    pub const IDENTITY: SymmetryOp = SymmetryOp {
        rotation: 0,
        reflect: false,
    };
    /// Rotation by 2 pi / 3 about the origin.
    pub const R: SymmetryOp = SymmetryOp {
        rotation: 1,
        reflect: false,
    };
    /// Reflection about the vertical axis.
    pub const S_DELTA: SymmetryOp = SymmetryOp {
        rotation: 0,
        reflect: true,
    };

    pub fn all() -> [SymmetryOp; 6] {
        let mut out = [Self::IDENTITY; 6];
        for (i, g) in out.iter_mut().enumerate() {
            *g = SymmetryOp {
                rotation: (i % 3) as u8,
                reflect: i >= 3,
            };
        }
        out
    }

    pub fn apply(self, v: [f64; 2]) -> [f64; 2] {
        let [mut x, y] = v;
        if self.reflect {
            x = -x;
        }
        rotate(x, y, self.rotation % 3)
    }

    pub fn inverse(self) -> SymmetryOp {
        if self.reflect {
            self
        } else {
            SymmetryOp {
                rotation: (3 - self.rotation % 3) % 3,
                reflect: false,
            }
        }
    }
}

fn rotate(x: f64, y: f64, k: u8) -> [f64; 2] {
    let (c, s) = match k {
        0 => return [x, y],
        1 => (-0.5, SQRT3 / 2.0),
        _ => (-0.5, -SQRT3 / 2.0),
    };
    [c * x - s * y, s * x + c * y]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn interior_point() -> impl Strategy<Value = (f64, f64)> {
        // barycentric sampling of the ring triangle, kept away from the walls
        (0.05f64..0.9, 0.05f64..0.9).prop_filter_map("inside", |(u, v)| {
            if u + v > 0.95 {
                return None;
            }
            let a = [-PI / SQRT3, -FRAC_PI_3];
            let b = [PI / SQRT3, -FRAC_PI_3];
            let c = [0.0, 2.0 * FRAC_PI_3];
            let w = 1.0 - u - v;
            let p = (
                w * a[0] + u * b[0] + v * c[0],
                w * a[1] + u * b[1] + v * c[1],
            );
            let min_gap = 0.15;
            WALL_NORMALS
                .iter()
                .all(|n| FRAC_PI_3 + n[0] * p.0 + n[1] * p.1 > min_gap)
                .then_some(p)
        })
    }

    #[test]
    fn ring_minimum_is_zero() {
        let v = PotentialModel::Ring.value(0.0, 0.0).unwrap();
        assert!(v.abs() < 1e-12, "v(0,0) = {v}");
        let g = PotentialModel::Ring.gradient(0.0, 0.0).unwrap();
        assert!(g[0].abs() < 1e-12 && g[1].abs() < 1e-12);
    }

    #[test]
    fn ring_hessian_isotropic_at_origin() {
        let s = PotentialModel::Ring.sample(0.0, 0.0).unwrap();
        assert_relative_eq!(s.hessian[0][0], 10.0 / 9.0, max_relative = 1e-12);
        assert_relative_eq!(s.hessian[1][1], 10.0 / 9.0, max_relative = 1e-12);
        assert!(s.hessian[0][1].abs() < 1e-12);
    }

    #[test]
    fn ring_outside_is_domain_error() {
        assert!(matches!(
            PotentialModel::Ring.sample(0.0, -FRAC_PI_3),
            Err(Error::Domain { .. })
        ));
        assert!(PotentialModel::Ring.sample(0.0, -1.2).is_err());
        assert!(PotentialModel::Ring.sample(3.0, 0.0).is_err());
        assert!(!PotentialModel::Ring.contains(0.0, 2.0 * FRAC_PI_3));
        assert!(PotentialModel::Ring.contains(0.0, 2.0 * FRAC_PI_3 - 1e-3));
    }

    #[test]
    fn ring_wall_asymptotics() {
        // v ~ (y + pi/3)^-6 / 64 * 64 ... the leading sine factor dominates
        for d in [1e-1, 3e-2, 1e-2] {
            let v = PotentialModel::Ring.value(0.0, -FRAC_PI_3 + d).unwrap();
            let lead = d.powi(-6) / 64.0;
            let rel = (v - lead).abs() / lead;
            assert!(rel < 2.0 * d, "d = {d}, rel = {rel}");
        }
    }

    #[test]
    fn henon_heiles_saddle() {
        let v = PotentialModel::HenonHeiles.value(0.0, 1.0).unwrap();
        assert_relative_eq!(v, 1.0 / 6.0, epsilon = 1e-15);
        let g = PotentialModel::HenonHeiles.gradient(0.0, 1.0).unwrap();
        assert_eq!(g, [0.0, 0.0]);
        assert_eq!(PotentialModel::HenonHeiles.escape_energy(), 1.0 / 6.0);
    }

    #[test]
    fn frequencies() {
        assert_relative_eq!(PotentialModel::Ring.origin_frequency(), (5.0f64 / 9.0).sqrt());
        assert_relative_eq!(PotentialModel::HenonHeiles.origin_frequency(), 1.0);
    }

    #[test]
    fn centrifugal() {
        let u = ScaledUnits::new(PotentialModel::Ring, 0.01).unwrap();
        assert_eq!(centrifugal_offset(0, &u).unwrap(), 0.0);
        assert_relative_eq!(centrifugal_offset(3, &u).unwrap(), 3e-4, max_relative = 1e-12);
        assert_eq!(centrifugal_offset(-3, &u).unwrap(), centrifugal_offset(3, &u).unwrap());
        let hh = ScaledUnits::new(PotentialModel::HenonHeiles, 0.01).unwrap();
        assert!(centrifugal_offset(1, &hh).is_err());
        assert!(ScaledUnits::new(PotentialModel::Ring, 0.0).is_err());
    }

    #[test]
    fn equilateral_maps_to_origin() {
        let cfg = RingConfiguration {
            theta: [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0],
            ell: [0.0; 3],
        };
        let j = cfg.to_jacobi().unwrap();
        assert!(j.plane.x.abs() < 1e-14 && j.plane.y.abs() < 1e-14 && j.z.abs() < 1e-14);
    }

    #[test]
    fn contact_maps_to_bottom_edge() {
        let cfg = RingConfiguration {
            theta: [0.3, 0.3 + 1e-9, 2.0],
            ell: [0.0; 3],
        };
        let j = cfg.to_jacobi().unwrap();
        assert!((j.plane.y + FRAC_PI_3).abs() < 1e-8);
        assert!(!PotentialModel::Ring.contains(j.plane.x, j.plane.y - 1e-8));
    }

    #[test]
    fn ordering_violation_rejected() {
        let cfg = RingConfiguration {
            theta: [1.0, 0.5, 2.0],
            ell: [0.0; 3],
        };
        assert!(matches!(cfg.to_jacobi(), Err(Error::Ordering(_))));
    }

    #[test]
    fn symmetry_group_closes() {
        let p = [0.3, -0.2];
        let r3 = SymmetryOp::R.apply(SymmetryOp::R.apply(SymmetryOp::R.apply(p)));
        assert_relative_eq!(r3[0], p[0], epsilon = 1e-15);
        assert_relative_eq!(r3[1], p[1], epsilon = 1e-15);
        for g in SymmetryOp::all() {
            let q = g.inverse().apply(g.apply(p));
            assert_relative_eq!(q[0], p[0], epsilon = 1e-14);
            assert_relative_eq!(q[1], p[1], epsilon = 1e-14);
        }
    }

    proptest! {
        #[test]
        fn jacobi_round_trip(t1 in -3.0f64..3.0, g1 in 0.05f64..2.0, g2 in 0.05f64..2.0,
                             l in proptest::array::uniform3(-5.0f64..5.0)) {
            prop_assume!(g1 + g2 < 2.0 * PI - 0.05);
            let cfg = RingConfiguration { theta: [t1, t1 + g1, t1 + g1 + g2], ell: l };
            let j = cfg.to_jacobi().unwrap();
            prop_assert!((j.pz - (l[0] + l[1] + l[2])).abs() < 1e-12);
            let back = RingConfiguration::from_jacobi(&j).unwrap();
            for k in 0..3 {
                prop_assert!((back.theta[k] - cfg.theta[k]).abs() < 1e-12);
                prop_assert!((back.ell[k] - cfg.ell[k]).abs() < 1e-12);
            }
            // kinetic energy splits into the planar part and the free rotor
            let planar = 0.25 * (j.plane.px.powi(2) + j.plane.py.powi(2));
            let rotor = j.pz * j.pz / 6.0;
            prop_assert!((cfg.kinetic_energy() - planar - rotor).abs() < 1e-10);
            // and the pair interactions equal the planar potential
            let v = PotentialModel::Ring.value(j.plane.x, j.plane.y).unwrap();
            prop_assert!((cfg.interaction_energy() - v).abs() < 1e-9 * (1.0 + v.abs()));
        }

        #[test]
        fn c3v_invariance((x, y) in interior_point()) {
            for model in [PotentialModel::Ring, PotentialModel::HenonHeiles] {
                let v = model.value(x, y).unwrap();
                for g in SymmetryOp::all() {
                    let [gx, gy] = g.apply([x, y]);
                    let w = model.value(gx, gy).unwrap();
                    prop_assert!((w - v).abs() <= 1e-12 * (1.0 + v.abs()), "{model} {g:?}: {v} vs {w}");
                }
            }
        }

        #[test]
        fn derivatives_match_finite_differences((x, y) in interior_point()) {
            let h = 1e-5;
            for model in [PotentialModel::Ring, PotentialModel::HenonHeiles] {
                let s = model.sample(x, y).unwrap();
                let v = |a: f64, b: f64| model.value(a, b).unwrap();
                let g = |a: f64, b: f64| model.gradient(a, b).unwrap();
                let fd = [(v(x + h, y) - v(x - h, y)) / (2.0 * h), (v(x, y + h) - v(x, y - h)) / (2.0 * h)];
                let gnorm = s.gradient[0].hypot(s.gradient[1]).max(1e-3);
                for k in 0..2 {
                    prop_assert!((fd[k] - s.gradient[k]).abs() / gnorm < 1e-6);
                }
                let hx = [g(x + h, y), g(x - h, y)];
                let hy = [g(x, y + h), g(x, y - h)];
                let hnorm = s.hessian.iter().flatten().fold(0.0f64, |m, e| m.max(e.abs()));
                for k in 0..2 {
                    let dx = (hx[0][k] - hx[1][k]) / (2.0 * h);
                    let dy = (hy[0][k] - hy[1][k]) / (2.0 * h);
                    prop_assert!((dx - s.hessian[0][k]).abs() / hnorm < 1e-6);
                    prop_assert!((dy - s.hessian[1][k]).abs() / hnorm < 1e-6);
                }
                prop_assert_eq!(s.hessian[0][1], s.hessian[1][0]);
            }
        }
    }
}
