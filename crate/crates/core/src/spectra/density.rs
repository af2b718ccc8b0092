//! Probability densities unfolded from the reduced domain to the whole
//! configuration triangle.

use std::io::Write;

use super::domain::{DiscretizedDomain, DIAGONAL};
use super::eigensolver::EigenPair;
use super::IrrepLabel;
use crate::hamiltonians::SymmetryOp;

/// `|psi|^2` of one eigenpair over the full plane, zero outside the unfolded
/// truncated domain.
pub struct DensityField<'a> {
    domain: &'a DiscretizedDomain,
    pair: &'a EigenPair,
}

pub fn unfold_density<'a>(domain: &'a DiscretizedDomain, pair: &'a EigenPair) -> DensityField<'a> {
    assert_eq!(domain.irrep, pair.irrep, "eigenpair belongs to a different sector");
    DensityField { domain, pair }
}

/// Maps `p` into the reduced sector between the rays at -90 and -30 degrees
/// with an element of C3v.
pub(crate) fn to_reduced(p: [f64; 2]) -> [f64; 2] {
    for g in SymmetryOp::all() {
        let q = g.apply(p);
        if in_sector(q) {
            return q;
        }
    }
    // only reachable through rounding on a sector boundary
    let g = SymmetryOp::all()
        .into_iter()
        .min_by(|a, b| sector_violation(a.apply(p)).partial_cmp(&sector_violation(b.apply(p))).unwrap())
        .unwrap();
    g.apply(p)
}

fn sector_violation(q: [f64; 2]) -> f64 {
    // inside: x >= 0 and on the lower side of the OB ray
    let cross = DIAGONAL[0] * q[1] - DIAGONAL[1] * q[0];
    (-q[0]).max(0.0) + cross.max(0.0)
}

fn in_sector(q: [f64; 2]) -> bool {
    sector_violation(q) == 0.0
}

impl<'a> DensityField<'a> {
    pub fn domain(&self) -> &'a DiscretizedDomain {
        self.domain
    }

    pub fn pair(&self) -> &'a EigenPair {
        self.pair
    }

    /// Density at a point of the reduced domain.
    pub fn eval_reduced(&self, q: [f64; 2]) -> f64 {
        let mesh = &self.domain.mesh;
        if !mesh.contains(q, 1e-12) {
            return 0.0;
        }
        let (e, s, t) = mesh.locate(q);
        let nodes = element_nodes(self.domain, e);
        let vals = self.domain.basis.values(s, t);
        self.density_at(q[0], q[1], &vals, &nodes)
    }

    fn density_at(&self, x: f64, y: f64, vals: &[f64], nodes: &[usize]) -> f64 {
        let field = |f: &[f64]| nodes.iter().zip(vals).map(|(&n, w)| w * f[n]).sum::<f64>();
        match self.pair.irrep {
            IrrepLabel::A1 | IrrepLabel::A2 => field(&self.pair.fields[0]).powi(2),
            IrrepLabel::E => {
                let (u1, u2) = (field(&self.pair.fields[0]), field(&self.pair.fields[1]));
                (x * x + y * y) * (u1 * u1 + u2 * u2)
            }
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.eval_reduced(to_reduced([x, y]))
    }

    /// Integral over the whole unfolded domain: six times the element
    /// quadrature over the reduced mesh.
    pub fn integrate(&self) -> f64 {
        let mut total = 0.0;
        for_each_quadrature_point(self.domain, |x, y, w, vals, nodes| {
            total += w * self.density_at(x, y, vals, nodes);
        });
        6.0 * total
    }

    /// Calls `f(x, y, weight, density)` at every quadrature point of the
    /// reduced mesh.
    pub(crate) fn for_each_sample<F: FnMut(f64, f64, f64, f64)>(&self, mut f: F) {
        for_each_quadrature_point(self.domain, |x, y, w, vals, nodes| {
            f(x, y, w, self.density_at(x, y, vals, nodes));
        });
    }

    /// Samples the density on an `nx x ny` grid covering `[x0, x1] x [y0, y1]`.
    pub fn raster(&self, (x0, x1): (f64, f64), (y0, y1): (f64, f64), nx: usize, ny: usize) -> DensityRaster {
        let xs: Vec<f64> = (0..nx).map(|i| x0 + (x1 - x0) * i as f64 / (nx.max(2) - 1) as f64).collect();
        let ys: Vec<f64> = (0..ny).map(|j| y0 + (y1 - y0) * j as f64 / (ny.max(2) - 1) as f64).collect();
        let mut values = Vec::with_capacity(nx * ny);
        for &y in &ys {
            for &x in &xs {
                values.push(self.eval(x, y));
            }
        }
        DensityRaster { xs, ys, values }
    }

    /// Raster over the bounding box of the unfolded domain.
    pub fn raster_default(&self, nx: usize, ny: usize) -> DensityRaster {
        let (p, q) = (self.domain.mesh.p, self.domain.mesh.q);
        let mut pts = Vec::new();
        for g in SymmetryOp::all() {
            pts.push(g.apply(p));
            pts.push(g.apply(q));
        }
        let bound = |f: fn(f64, f64) -> f64, i: usize, init: f64| pts.iter().map(|v| v[i]).fold(init, f);
        let xr = (bound(f64::min, 0, 0.0), bound(f64::max, 0, 0.0));
        let yr = (bound(f64::min, 1, 0.0), bound(f64::max, 1, 0.0));
        self.raster(xr, yr, nx, ny)
    }
}

/// Row-major samples, `values[j * nx + i]` at `(xs[i], ys[j])`.
#[derive(Debug, Clone)]
pub struct DensityRaster {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
}

impl DensityRaster {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "x,y,density")?;
        for (j, y) in self.ys.iter().enumerate() {
            for (i, x) in self.xs.iter().enumerate() {
                writeln!(w, "{x:.8e},{y:.8e},{:.10e}", self.values[j * self.xs.len() + i])?;
            }
        }
        Ok(())
    }
}

fn element_nodes(domain: &DiscretizedDomain, e: usize) -> Vec<usize> {
    // recomputing one element is cheaper than keeping all of them
    let mesh = &domain.mesh;
    let (n, k) = (mesh.n, mesh.order);
    let mut idx = e;
    let mut ei = 0;
    while idx >= 2 * (n - ei) - 1 {
        idx -= 2 * (n - ei) - 1;
        ei += 1;
    }
    let (ej, down) = (idx / 2, idx % 2 == 1);
    domain
        .basis
        .nodes
        .iter()
        .map(|&(a1, a2)| {
            if down {
                mesh.node_id(k * (ei + 1) - a1, k * (ej + 1) - a2)
            } else {
                mesh.node_id(k * ei + a1, k * ej + a2)
            }
        })
        .collect()
}

/// Calls `f(x, y, weight, basis values, element nodes)` for every element
/// quadrature point of the reduced mesh.
pub(crate) fn for_each_quadrature_point<F>(domain: &DiscretizedDomain, mut f: F)
where
    F: FnMut(f64, f64, f64, &[f64], &[usize]),
{
    let values: Vec<Vec<f64>> = domain.rule.points.iter().map(|&(s, t)| domain.basis.values(s, t)).collect();
    for e in domain.mesh.elements(&domain.basis) {
        let det = (e.jac[0][0] * e.jac[1][1] - e.jac[0][1] * e.jac[1][0]).abs();
        for (q, (&(s, t), &w)) in domain.rule.points.iter().zip(&domain.rule.weights).enumerate() {
            let x = e.origin[0] + e.jac[0][0] * s + e.jac[0][1] * t;
            let y = e.origin[1] + e.jac[1][0] * s + e.jac[1][1] * t;
            f(x, y, w * det, &values[q], &e.nodes);
        }
    }
}
